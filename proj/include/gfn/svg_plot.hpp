#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gfn/runner.hpp"

namespace gfn {

struct PlotAxes {
  std::string title;
  std::string x_label = "States visited";
  std::string y_label;
};

/// Line chart with one polyline per series and a shaded mean +/- stderr
/// band. All series must share the same x grid. Output depends only on the
/// inputs.
std::string render_plot(const std::vector<AggregateSeries>& series, const std::vector<std::string>& labels,
                        const PlotAxes& axes);

void emit_plot(const std::vector<AggregateSeries>& series, const std::vector<std::string>& labels, const PlotAxes& axes,
               const std::filesystem::path& path);

}  // namespace gfn
