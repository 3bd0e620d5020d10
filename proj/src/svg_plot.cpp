#include "gfn/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gfn/errors.hpp"

namespace gfn {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo, hi;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string render_plot(const std::vector<AggregateSeries>& series, const std::vector<std::string>& labels,
                        const PlotAxes& axes) {
  if (series.empty()) throw UsageError("plot needs at least one series");
  if (labels.size() != series.size()) throw UsageError("plot needs one label per series");
  for (const auto& s : series) {
    if (s.x != series.front().x) throw UsageError("plot series do not share an x grid");
    if (s.mean.size() != s.x.size() || s.stderr_.size() != s.x.size()) throw UsageError("plot series is ragged");
  }
  const std::vector<double>& xs = series.front().x;
  if (xs.empty()) throw UsageError("plot series are empty");

  double ylo = std::numeric_limits<double>::infinity();
  double yhi = -ylo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ylo = std::min(ylo, s.mean[i] - s.stderr_[i]);
      yhi = std::max(yhi, s.mean[i] + s.stderr_[i]);
    }
  }
  const Range xr = xs.size() > 1 ? Range{xs.front(), xs.back()} : padded(xs.front(), xs.front());
  const Range yr = padded(ylo, yhi);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
     << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight) << "\" fill=\"white\"/>\n";
  if (!axes.title.empty()) {
    os << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(axes.title) << "</text>\n";
  }

  // Frame and ticks.
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
     << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / kTicks;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / kTicks;
    os << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(px(fx)) << "\" y2=\""
       << num(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kTop + plot_h + 18) << "\" text-anchor=\"middle\">"
       << tick_label(fx) << "</text>\n";
    os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(fy)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
       << num(py(fy)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(fy) + 4) << "\" text-anchor=\"end\">" << tick_label(fy)
       << "</text>\n";
  }
  os << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
     << escape(axes.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << num(kTop + plot_h / 2) << ")\">" << escape(axes.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << num(px(xs[i])) << ',' << num(py(s.mean[i] + s.stderr_[i]));
    for (std::size_t i = xs.size(); i-- > 0;) os << ' ' << num(px(xs[i])) << ',' << num(py(s.mean[i] - s.stderr_[i]));
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << num(px(xs[i])) << ',' << num(py(s.mean[i]));
    os << "\"/>\n";
  }

  const double lx = kLeft + plot_w + 15;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<g class=\"legend\"><line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20) << "\" y2=\""
       << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << num(lx + 26) << "\" y=\""
       << num(ly + 4) << "\">" << escape(labels[k]) << "</text></g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_plot(const std::vector<AggregateSeries>& series, const std::vector<std::string>& labels, const PlotAxes& axes,
               const std::filesystem::path& path) {
  const std::string svg = render_plot(series, labels, axes);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << svg;
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace gfn
