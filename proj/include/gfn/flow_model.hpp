#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gfn/adam.hpp"
#include "gfn/hypergrid.hpp"
#include "gfn/mlp.hpp"
#include "gfn/rng.hpp"

namespace gfn {

enum class Objective { FlowMatching, TrajectoryBalance };

/// Smoothing constant added inside the flow-matching logarithms.
inline constexpr double kLogEpsilon = 1e-8;

/// MLP over one-hot grid encodings with one output per action (increments
/// then stop). Under flow matching the outputs are log edge flows; under
/// trajectory balance they are forward-policy logits and `log_z` is the
/// learned log-partition.
struct FlowModel {
  MLPParams mlp;
  Objective objective = Objective::FlowMatching;
  Tensor log_z = Tensor({1});

  /// All trainable tensors in optimizer order; log_z only for TB.
  std::vector<Tensor*> trainable();
};

FlowModel make_flow_model(const HypergridEnv& env, Objective objective, std::uint64_t seed);

/// Raw network outputs for `states`, one row each. Throws DivergenceError on
/// non-finite values.
Tensor model_outputs(const FlowModel& model, const HypergridEnv& env, std::span<const GridState> states);

/// F(s -> s') = exp(output) for every allowed action. Flow-matching models only.
std::vector<std::pair<Action, double>> edge_flows(const FlowModel& model, const HypergridEnv& env,
                                                  const GridState& s);

/// P_F(.|s) over allowed actions. For flow matching this is the flow
/// normalised by its sum, for trajectory balance a masked softmax; both
/// reduce to the same expression in the raw outputs.
std::vector<std::pair<Action, double>> forward_policy(const FlowModel& model, const HypergridEnv& env,
                                                      const GridState& s);

/// Masked softmax of one output row; entries for disallowed actions are 0.
std::vector<double> masked_softmax(std::span<const double> row, const std::vector<bool>& mask);

/// Dense forward-policy rows (action_count wide) for many states at once.
std::vector<std::vector<double>> forward_policy_batch(const FlowModel& model, const HypergridEnv& env,
                                                      std::span<const GridState> states);

struct SamplerConfig {
  double epsilon = 0.05;  // probability mass mixed in uniformly over allowed actions
  std::uint64_t seed = 0;
};

/// Rolls out trajectories from the origin under
///   (1 - epsilon) * P_F + epsilon * uniform(allowed actions).
class TrajectorySampler {
 public:
  explicit TrajectorySampler(SamplerConfig cfg);

  Trajectory sample(const FlowModel& model, const HypergridEnv& env);
  /// `count` trajectories advanced in lockstep, one batched forward pass
  /// per step.
  std::vector<Trajectory> sample_batch(const FlowModel& model, const HypergridEnv& env, std::size_t count);

  double epsilon() const { return cfg_.epsilon; }
  Rng& rng() { return rng_; }

 private:
  SamplerConfig cfg_;
  Rng rng_;
};

/// Objective value with gradients for every trainable tensor.
struct LossEvaluation {
  double loss = 0.0;
  MLPGradients mlp_grads;
  double log_z_grad = 0.0;
};

/// Squared log-ratio between inflow and outflow of one state.
double flow_matching_residual(double inflow, double outflow, double log_epsilon = kLogEpsilon);

/// Mean over `states` of the flow-matching objective. Each state contributes
///   (log[eps + sum_parents F(p->s)] - log[eps + sum_children F(s->c) + F(s->stop)])^2
/// (skipped at the origin, which has no inflow) plus the terminal-matching
///   (log[eps + F(s->stop)] - log[eps + R(s)])^2.
LossEvaluation fm_loss(const FlowModel& model, const HypergridEnv& env, std::span<const GridState> states,
                       double log_epsilon = kLogEpsilon);

/// Mean over `trajectories` of
///   (log Z + sum log P_F(s'|s) + sum log P_B(s|s') - log R(x))^2
/// with P_B uniform over parents.
LossEvaluation tb_loss(const FlowModel& model, const HypergridEnv& env, std::span<const Trajectory> trajectories);

/// States of all trajectories, deduplicated in first-seen order.
std::vector<GridState> unique_states(std::span<const Trajectory> online, std::span<const Trajectory> replayed);

struct TrainStepResult {
  double loss = 0.0;  // objective before the update
};

/// One Adam update on the union of online and replayed trajectories.
TrainStepResult train_step(FlowModel& model, const HypergridEnv& env, std::span<const Trajectory> online,
                           std::span<const Trajectory> replayed, AdamState& opt);

}  // namespace gfn
