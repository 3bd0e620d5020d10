#include "gfn/flow_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gfn/errors.hpp"

namespace gfn {
namespace {

double log_sum_exp_masked(std::span<const double> row, const std::vector<bool>& mask) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (mask[a]) hi = std::max(hi, row[a]);
  }
  double acc = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (mask[a]) acc += std::exp(row[a] - hi);
  }
  return hi + std::log(acc);
}

std::span<const double> row_of(const Tensor& t, std::size_t r) { return t.data().subspan(r * t.cols(), t.cols()); }

void require_objective(const FlowModel& model, Objective expected, const char* what) {
  if (model.objective != expected) throw UsageError(std::string(what) + " called on a model with the wrong objective");
}

void require_dims(const FlowModel& model, const HypergridEnv& env) {
  if (model.mlp.input_width() != env.encoding_width() || model.mlp.output_width() != env.action_count()) {
    throw DimensionError("flow model dimensions do not match the environment");
  }
}

}  // namespace

std::vector<Tensor*> FlowModel::trainable() {
  std::vector<Tensor*> out = mlp.tensors();
  if (objective == Objective::TrajectoryBalance) out.push_back(&log_z);
  return out;
}

FlowModel make_flow_model(const HypergridEnv& env, Objective objective, std::uint64_t seed) {
  FlowModel model;
  model.mlp = init_params(seed, standard_layer_sizes(env.encoding_width(), env.action_count()));
  model.objective = objective;
  return model;
}

Tensor model_outputs(const FlowModel& model, const HypergridEnv& env, std::span<const GridState> states) {
  require_dims(model, env);
  Tensor out = mlp_predict(model.mlp, env.encode_batch(states));
  if (!out.all_finite()) throw DivergenceError("flow model produced a non-finite output");
  return out;
}

std::vector<std::pair<Action, double>> edge_flows(const FlowModel& model, const HypergridEnv& env,
                                                  const GridState& s) {
  require_objective(model, Objective::FlowMatching, "edge_flows");
  const Tensor out = model_outputs(model, env, std::span(&s, 1));
  std::vector<std::pair<Action, double>> flows;
  for (const Action& a : env.allowed_actions(s)) {
    const double f = std::exp(out[env.action_index(a)]);
    if (!std::isfinite(f)) throw DivergenceError("edge flow overflow at " + s.to_string());
    flows.emplace_back(a, f);
  }
  return flows;
}

std::vector<double> masked_softmax(std::span<const double> row, const std::vector<bool>& mask) {
  const double lse = log_sum_exp_masked(row, mask);
  std::vector<double> probs(row.size(), 0.0);
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (mask[a]) probs[a] = std::exp(row[a] - lse);
  }
  return probs;
}

std::vector<std::pair<Action, double>> forward_policy(const FlowModel& model, const HypergridEnv& env,
                                                      const GridState& s) {
  const Tensor out = model_outputs(model, env, std::span(&s, 1));
  const std::vector<double> probs = masked_softmax(row_of(out, 0), env.action_mask(s));
  std::vector<std::pair<Action, double>> policy;
  for (const Action& a : env.allowed_actions(s)) policy.emplace_back(a, probs[env.action_index(a)]);
  return policy;
}

std::vector<std::vector<double>> forward_policy_batch(const FlowModel& model, const HypergridEnv& env,
                                                      std::span<const GridState> states) {
  const Tensor out = model_outputs(model, env, states);
  std::vector<std::vector<double>> rows;
  rows.reserve(states.size());
  for (std::size_t r = 0; r < states.size(); ++r) rows.push_back(masked_softmax(row_of(out, r), env.action_mask(states[r])));
  return rows;
}

TrajectorySampler::TrajectorySampler(SamplerConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (!(cfg_.epsilon >= 0.0 && cfg_.epsilon < 1.0)) throw ConfigError("sampler epsilon must lie in [0, 1)");
}

Trajectory TrajectorySampler::sample(const FlowModel& model, const HypergridEnv& env) {
  return std::move(sample_batch(model, env, 1).front());
}

std::vector<Trajectory> TrajectorySampler::sample_batch(const FlowModel& model, const HypergridEnv& env,
                                                        std::size_t count) {
  require_dims(model, env);
  const std::size_t max_length = env.ndim() * static_cast<std::size_t>(env.side() - 1) + 1;
  std::vector<Trajectory> trajs(count);
  std::vector<GridState> current(count, env.origin());
  std::vector<std::size_t> active(count);
  for (std::size_t i = 0; i < count; ++i) active[i] = i;

  std::vector<GridState> batch;
  std::vector<double> weights(env.action_count());
  while (!active.empty()) {
    batch.clear();
    for (std::size_t i : active) batch.push_back(current[i]);
    const Tensor out = model_outputs(model, env, batch);

    std::vector<std::size_t> still_active;
    for (std::size_t r = 0; r < active.size(); ++r) {
      const std::size_t i = active[r];
      const std::vector<bool> mask = env.action_mask(current[i]);
      const std::vector<double> policy = masked_softmax(row_of(out, r), mask);
      const double allowed = static_cast<double>(std::count(mask.begin(), mask.end(), true));
      for (std::size_t a = 0; a < weights.size(); ++a) {
        weights[a] = mask[a] ? (1.0 - cfg_.epsilon) * policy[a] + cfg_.epsilon / allowed : 0.0;
      }
      const Action action = env.action_at(rng_.categorical(weights));

      Trajectory& t = trajs[i];
      t.states.push_back(current[i]);
      t.actions.push_back(action);
      if (t.actions.size() > max_length) throw std::logic_error("trajectory exceeded the DAG depth bound");
      StepResult next = env.step(current[i], action);
      if (auto* s = std::get_if<GridState>(&next)) {
        current[i] = std::move(*s);
        still_active.push_back(i);
      } else {
        t.terminal_reward = env.reward(t.final_state());
      }
    }
    active = std::move(still_active);
  }
  return trajs;
}

double flow_matching_residual(double inflow, double outflow, double log_epsilon) {
  const double d = std::log(log_epsilon + inflow) - std::log(log_epsilon + outflow);
  return d * d;
}

LossEvaluation fm_loss(const FlowModel& model, const HypergridEnv& env, std::span<const GridState> states,
                       double log_epsilon) {
  require_objective(model, Objective::FlowMatching, "fm_loss");
  require_dims(model, env);
  if (states.empty()) throw UsageError("fm_loss needs a non-empty batch of states");

  // Rows: the batch states and every parent they draw inflow from.
  std::map<GridState, std::size_t> row_index;
  std::vector<GridState> rows;
  auto row_for = [&](const GridState& s) {
    auto [it, inserted] = row_index.try_emplace(s, rows.size());
    if (inserted) rows.push_back(s);
    return it->second;
  };
  struct Item {
    std::size_t row;
    std::vector<std::pair<std::size_t, std::size_t>> inflow;  // (parent row, action index)
  };
  std::vector<Item> items;
  items.reserve(states.size());
  for (const GridState& s : states) {
    Item item{row_for(s), {}};
    for (const auto& [parent, action] : env.parents(s)) item.inflow.emplace_back(row_for(parent), env.action_index(action));
    items.push_back(std::move(item));
  }

  auto [out, tape] = mlp_forward(model.mlp, env.encode_batch(rows));
  if (!out.all_finite()) throw DivergenceError("flow model produced a non-finite output");
  Tensor seed(out.shape());
  const std::size_t stop = env.ndim();
  const double scale = 1.0 / static_cast<double>(states.size());

  double total = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const Item& item = items[k];
    const GridState& s = states[k];
    const std::vector<bool> mask = env.action_mask(s);

    const double stop_flow = std::exp(out.at(item.row, stop));
    const double terminal = std::log(log_epsilon + stop_flow) - std::log(log_epsilon + env.reward(s));
    total += terminal * terminal;
    seed.at(item.row, stop) += scale * 2.0 * terminal * stop_flow / (log_epsilon + stop_flow);

    if (item.inflow.empty()) continue;
    double inflow = log_epsilon;
    for (const auto& [r, a] : item.inflow) inflow += std::exp(out.at(r, a));
    double outflow = log_epsilon;
    for (std::size_t a = 0; a < mask.size(); ++a) {
      if (mask[a]) outflow += std::exp(out.at(item.row, a));
    }
    const double d = std::log(inflow) - std::log(outflow);
    total += d * d;
    for (const auto& [r, a] : item.inflow) seed.at(r, a) += scale * 2.0 * d * std::exp(out.at(r, a)) / inflow;
    for (std::size_t a = 0; a < mask.size(); ++a) {
      if (mask[a]) seed.at(item.row, a) -= scale * 2.0 * d * std::exp(out.at(item.row, a)) / outflow;
    }
  }

  LossEvaluation eval;
  eval.loss = total * scale;
  if (!std::isfinite(eval.loss)) throw DivergenceError("flow-matching loss is not finite");
  eval.mlp_grads = backward(tape, seed);
  return eval;
}

LossEvaluation tb_loss(const FlowModel& model, const HypergridEnv& env, std::span<const Trajectory> trajectories) {
  require_objective(model, Objective::TrajectoryBalance, "tb_loss");
  require_dims(model, env);
  if (trajectories.empty()) throw UsageError("tb_loss needs at least one trajectory");

  std::vector<GridState> rows;
  for (const Trajectory& t : trajectories) rows.insert(rows.end(), t.states.begin(), t.states.end());
  auto [out, tape] = mlp_forward(model.mlp, env.encode_batch(rows));
  if (!out.all_finite()) throw DivergenceError("flow model produced a non-finite output");
  Tensor seed(out.shape());
  const double scale = 1.0 / static_cast<double>(trajectories.size());
  const double log_z = model.log_z[0];

  LossEvaluation eval;
  double total = 0.0;
  std::size_t base = 0;
  for (const Trajectory& t : trajectories) {
    if (!(t.terminal_reward > 0.0)) throw UsageError("trajectory balance needs a positive terminal reward");
    double delta = log_z - std::log(t.terminal_reward);
    std::vector<std::vector<double>> policies;
    policies.reserve(t.states.size());
    for (std::size_t j = 0; j < t.states.size(); ++j) {
      const std::vector<bool> mask = env.action_mask(t.states[j]);
      const auto row = row_of(out, base + j);
      delta += row[env.action_index(t.actions[j])] - log_sum_exp_masked(row, mask);
      policies.push_back(masked_softmax(row, mask));
      // Backward transition into states[j] from its predecessor.
      if (j > 0) delta -= std::log(static_cast<double>(env.parents(t.states[j]).size()));
    }
    total += delta * delta;
    const double coeff = scale * 2.0 * delta;
    for (std::size_t j = 0; j < t.states.size(); ++j) {
      const std::size_t taken = env.action_index(t.actions[j]);
      for (std::size_t a = 0; a < policies[j].size(); ++a) {
        seed.at(base + j, a) += coeff * ((a == taken ? 1.0 : 0.0) - policies[j][a]);
      }
    }
    eval.log_z_grad += coeff;
    base += t.states.size();
  }

  eval.loss = total * scale;
  if (!std::isfinite(eval.loss)) throw DivergenceError("trajectory-balance loss is not finite");
  eval.mlp_grads = backward(tape, seed);
  return eval;
}

std::vector<GridState> unique_states(std::span<const Trajectory> online, std::span<const Trajectory> replayed) {
  std::map<GridState, bool> seen;
  std::vector<GridState> out;
  for (auto group : {online, replayed}) {
    for (const Trajectory& t : group) {
      for (const GridState& s : t.states) {
        if (seen.try_emplace(s, true).second) out.push_back(s);
      }
    }
  }
  return out;
}

TrainStepResult train_step(FlowModel& model, const HypergridEnv& env, std::span<const Trajectory> online,
                           std::span<const Trajectory> replayed, AdamState& opt) {
  if (online.empty()) throw UsageError("train_step needs at least one online trajectory");

  LossEvaluation eval;
  if (model.objective == Objective::FlowMatching) {
    const std::vector<GridState> states = unique_states(online, replayed);
    eval = fm_loss(model, env, states);
  } else {
    std::vector<Trajectory> batch(online.begin(), online.end());
    batch.insert(batch.end(), replayed.begin(), replayed.end());
    eval = tb_loss(model, env, batch);
  }

  std::vector<const Tensor*> grads;
  for (const Tensor* g : eval.mlp_grads.tensors()) grads.push_back(g);
  Tensor log_z_grad({1}, {eval.log_z_grad});
  if (model.objective == Objective::TrajectoryBalance) grads.push_back(&log_z_grad);

  const std::vector<Tensor*> params = model.trainable();
  adam_step(std::span<Tensor* const>(params), std::span<const Tensor* const>(grads), opt);
  model.mlp.mark_modified();
  return {eval.loss};
}

}  // namespace gfn
