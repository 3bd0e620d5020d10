// Command-line front end: single runs, seeded run matrices and SVG plots.

#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gfn/config.hpp"
#include "gfn/errors.hpp"
#include "gfn/runner.hpp"
#include "gfn/svg_plot.hpp"

namespace {

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

std::string describe(const gfn::RunResult& r) {
  std::string line = r.ok ? "ok" : "failed: " + r.failure;
  if (!r.records.empty()) {
    const auto& last = r.records.back();
    line += " states_visited=" + std::to_string(last.states_visited) + " modes_found=" + std::to_string(last.modes_found) +
            " empirical_l1=" + gfn::format_real(last.empirical_l1);
  }
  if (r.states_to_all_modes) line += " all_modes_at=" + std::to_string(*r.states_to_all_modes);
  return line;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GFlowNet replay-buffer experiments on the Hypergrid environment"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;

  auto* run_cmd = app.add_subcommand("run", "Train one configuration and write its metrics CSV");
  run_cmd->add_option("--config", config_path, "key = value config file");
  run_cmd->add_option("--set", overrides, "KEY=VALUE override (repeatable)");
  run_cmd->add_option("--out-dir", out_dir, "Output directory (overrides out_dir)");

  std::string seeds_text = "0-4";
  std::vector<std::string> sweep_texts;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* matrix_cmd = app.add_subcommand("matrix", "Run a sweep x seeds matrix and aggregate across seeds");
  matrix_cmd->add_option("--config", config_path, "key = value config file");
  matrix_cmd->add_option("--set", overrides, "KEY=VALUE override (repeatable)");
  matrix_cmd->add_option("--out-dir", out_dir, "Output directory (overrides out_dir)");
  matrix_cmd->add_option("--seeds", seeds_text, "Seed list, e.g. 0,1,2 or 0-4")->capture_default_str();
  matrix_cmd->add_option("--sweep", sweep_texts, "KEY=V1,V2,... (repeatable)");
  matrix_cmd->add_option("--jobs", jobs, "Parallel runs")->capture_default_str();

  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string metric = "modes_pct";
  std::string plot_out;
  gfn::PlotAxes axes;
  auto* plot_cmd = app.add_subcommand("plot", "Render aggregate CSVs as an SVG line chart");
  plot_cmd->add_option("--input", inputs, "Aggregate CSV (repeatable)")->required();
  plot_cmd->add_option("--label", labels, "Legend label per input (defaults to file stem)");
  plot_cmd->add_option("--metric", metric, "Metric column to plot")->capture_default_str();
  plot_cmd->add_option("--out", plot_out, "SVG output path")->required();
  plot_cmd->add_option("--title", axes.title, "Chart title");
  plot_cmd->add_option("--x-label", axes.x_label, "x-axis label")->capture_default_str();
  plot_cmd->add_option("--y-label", axes.y_label, "y-axis label (defaults to the metric)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!out_dir.empty()) overrides.push_back("out_dir=" + out_dir);

    if (*run_cmd) {
      const gfn::RunConfig cfg = gfn::parse_config(optional_path(config_path), overrides);
      const gfn::RunResult r = gfn::run(cfg);
      std::cout << r.csv_path.string() << ' ' << describe(r) << '\n';
      return r.ok ? 0 : 3;
    }

    if (*matrix_cmd) {
      const gfn::RunConfig base = gfn::parse_config(optional_path(config_path), overrides);
      std::vector<gfn::Sweep> sweeps;
      for (const auto& s : sweep_texts) sweeps.push_back(gfn::parse_sweep(s));
      const auto seeds = gfn::parse_seed_list(seeds_text);
      const gfn::MatrixResult m = gfn::run_matrix(base, sweeps, seeds, jobs);
      bool all_ok = true;
      for (const auto& cell : m.cells) {
        for (std::size_t s = 0; s < cell.runs.size(); ++s) {
          std::cout << cell.name << " seed=" << seeds[s] << ' ' << describe(cell.runs[s]) << '\n';
          all_ok = all_ok && cell.runs[s].ok;
        }
        if (cell.aggregate_path) std::cout << cell.name << " aggregate " << cell.aggregate_path->string() << '\n';
      }
      std::cout << "summary " << m.summary_path.string() << '\n';
      return all_ok ? 0 : 3;
    }

    if (*plot_cmd) {
      if (!labels.empty() && labels.size() != inputs.size()) {
        std::cerr << "error: --label must be given once per --input\n";
        return 2;
      }
      std::vector<gfn::AggregateSeries> series;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        series.push_back(gfn::read_aggregate_csv(inputs[i], metric));
        if (labels.size() < inputs.size()) labels.push_back(std::filesystem::path(inputs[i]).stem().string());
      }
      if (axes.y_label.empty()) axes.y_label = metric;
      gfn::emit_plot(series, labels, axes, plot_out);
      std::cout << plot_out << '\n';
      return 0;
    }
  } catch (const gfn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
