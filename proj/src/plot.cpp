#include "anasod/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

// Self-contained SVG writer for the convergence figure. Two panels: mean
// incumbent against query count and against simulated cost (log axis), each
// with a +-1 SE band. Output depends only on the summary contents, so reruns
// of the same experiment produce byte-identical files.

namespace anasod {
namespace {

constexpr double kPanelWidth = 430.0;
constexpr double kPanelHeight = 330.0;
constexpr double kMarginLeft = 62.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 34.0;
constexpr double kMarginBottom = 46.0;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Largest "nice" step (1/2/5 times a power of ten) giving at most six ticks.
double nice_step(double span) {
  if (!(span > 0)) return 1.0;
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) return mag * m;
  }
  return mag * 10.0;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;

  double to_unit(double v) const {
    double a = log_scale ? std::log10(v) : v;
    double l = log_scale ? std::log10(lo) : lo;
    double h = log_scale ? std::log10(hi) : hi;
    if (h <= l) return 0.5;
    return (a - l) / (h - l);
  }
};

struct Panel {
  double x0 = 0.0;  // outer top-left corner of the panel cell
  Axis x;
  Axis y;

  double px(double v) const {
    return x0 + kMarginLeft + x.to_unit(v) * (kPanelWidth - kMarginLeft - kMarginRight);
  }
  double py(double v) const {
    return kMarginTop + (1.0 - y.to_unit(v)) * (kPanelHeight - kMarginTop - kMarginBottom);
  }
};

void expand(Axis& axis, double pad_fraction) {
  double span = axis.hi - axis.lo;
  if (span <= 0) span = std::max(1.0, std::abs(axis.hi));
  axis.lo -= span * pad_fraction;
  axis.hi += span * pad_fraction;
}

std::vector<double> linear_ticks(const Axis& axis) {
  std::vector<double> out;
  double step = nice_step(axis.hi - axis.lo);
  double first = std::ceil(axis.lo / step) * step;
  for (double t = first; t <= axis.hi + step * 1e-9; t += step) {
    out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return out;
}

std::vector<double> log_ticks(const Axis& axis) {
  std::vector<double> out;
  int lo = static_cast<int>(std::ceil(std::log10(axis.lo) - 1e-9));
  int hi = static_cast<int>(std::floor(std::log10(axis.hi) + 1e-9));
  for (int e = lo; e <= hi; ++e) out.push_back(std::pow(10.0, e));
  if (out.size() < 2) {
    out = {axis.lo, axis.hi};
  }
  return out;
}

void draw_frame(std::ostringstream& svg, const Panel& panel, const std::string& title,
                const std::string& xlabel) {
  double left = panel.x0 + kMarginLeft;
  double right = panel.x0 + kPanelWidth - kMarginRight;
  double top = kMarginTop;
  double bottom = kPanelHeight - kMarginBottom;

  svg << "<rect x=\"" << fmt_coord(left) << "\" y=\"" << fmt_coord(top) << "\" width=\""
      << fmt_coord(right - left) << "\" height=\"" << fmt_coord(bottom - top)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << fmt_coord((left + right) / 2) << "\" y=\"" << fmt_coord(top - 12)
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << title
      << "</text>\n";
  svg << "<text x=\"" << fmt_coord((left + right) / 2) << "\" y=\""
      << fmt_coord(bottom + 34) << "\" text-anchor=\"middle\" font-size=\"11\" "
      << "font-family=\"sans-serif\">" << xlabel << "</text>\n";

  auto xticks = panel.x.log_scale ? log_ticks(panel.x) : linear_ticks(panel.x);
  for (double t : xticks) {
    double x = panel.px(t);
    if (x < left - 0.5 || x > right + 0.5) continue;
    svg << "<line x1=\"" << fmt_coord(x) << "\" y1=\"" << fmt_coord(bottom) << "\" x2=\""
        << fmt_coord(x) << "\" y2=\"" << fmt_coord(bottom + 4)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt_coord(x) << "\" y=\"" << fmt_coord(bottom + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(t)
        << "</text>\n";
  }
  for (double t : linear_ticks(panel.y)) {
    double y = panel.py(t);
    if (y < top - 0.5 || y > bottom + 0.5) continue;
    svg << "<line x1=\"" << fmt_coord(left - 4) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
        << fmt_coord(left) << "\" y2=\"" << fmt_coord(y)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt_coord(left - 7) << "\" y=\"" << fmt_coord(y + 3.5)
        << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(t)
        << "</text>\n";
  }
}

void draw_series(std::ostringstream& svg, const Panel& panel, const std::vector<double>& xs,
                 const std::vector<double>& means, const std::vector<double>& ses) {
  if (xs.empty()) return;
  std::ostringstream band;
  band << "<path d=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    band << (i == 0 ? 'M' : 'L') << fmt_coord(panel.px(xs[i])) << ' '
         << fmt_coord(panel.py(means[i] + ses[i]));
  }
  for (std::size_t j = xs.size(); j-- > 0;) {
    band << 'L' << fmt_coord(panel.px(xs[j])) << ' '
         << fmt_coord(panel.py(means[j] - ses[j]));
  }
  band << "Z\" fill=\"#4477aa\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
  svg << band.str();

  svg << "<polyline fill=\"none\" stroke=\"#4477aa\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) svg << ' ';
    svg << fmt_coord(panel.px(xs[i])) << ',' << fmt_coord(panel.py(means[i]));
  }
  svg << "\"/>\n";
}

void fit_y_axis(Panel& panel, const std::vector<double>& means,
                const std::vector<double>& ses) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means.size(); ++i) {
    lo = std::min(lo, means[i] - ses[i]);
    hi = std::max(hi, means[i] + ses[i]);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi <= lo) hi = lo + std::max(1e-9, std::abs(lo) * 1e-3);
  panel.y.lo = lo;
  panel.y.hi = hi;
  expand(panel.y, 0.08);
}

}  // namespace

std::string render_convergence_svg(const Summary& summary) {
  const double width = 2 * kPanelWidth + 20.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(kPanelHeight) << "\" viewBox=\"0 0 " << fmt(width) << ' '
      << fmt(kPanelHeight) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  // Left panel: incumbent against query index.
  {
    Panel panel;
    panel.x0 = 0.0;
    std::vector<double> xs(summary.mean_incumbent_by_step.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i + 1);
    panel.x.lo = xs.empty() ? 0.0 : 1.0;
    panel.x.hi = xs.empty() ? 1.0 : xs.back();
    if (panel.x.hi <= panel.x.lo) panel.x.hi = panel.x.lo + 1.0;
    fit_y_axis(panel, summary.mean_incumbent_by_step, summary.se_incumbent_by_step);
    draw_frame(svg, panel, summary.strategy + ": incumbent vs queries", "queries");
    draw_series(svg, panel, xs, summary.mean_incumbent_by_step, summary.se_incumbent_by_step);
  }

  // Right panel: incumbent against cumulative simulated cost, log axis.
  {
    Panel panel;
    panel.x0 = kPanelWidth + 20.0;
    if (summary.cost_grid.size() >= 2 && summary.cost_grid.front() > 0) {
      panel.x.log_scale = true;
      panel.x.lo = summary.cost_grid.front();
      panel.x.hi = summary.cost_grid.back();
      fit_y_axis(panel, summary.mean_incumbent_by_cost, summary.se_incumbent_by_cost);
      draw_frame(svg, panel, "incumbent vs cost", "simulated cost (s)");
      draw_series(svg, panel, summary.cost_grid, summary.mean_incumbent_by_cost, summary.se_incumbent_by_cost);
    } else {
      draw_frame(svg, panel, "incumbent vs cost", "simulated cost (s)");
      svg << "<text x=\"" << fmt_coord(panel.x0 + kPanelWidth / 2) << "\" y=\""
          << fmt_coord(kPanelHeight / 2)
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" "
          << "fill=\"#888888\">cost axis unavailable</text>\n";
    }
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace anasod
