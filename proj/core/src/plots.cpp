#include "tvcov/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tvcov/run_output.hpp"

namespace tvcov {

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kColors[i % std::size(kColors)]; }

void require_data(const RunLog& log) {
  if (log.steps.empty() && log.lloyd_costs.empty()) fail(ErrorCode::EmptyLog, "run log has no steps to plot");
}

// Affine map from a data rectangle to the plot area, y pointing up.
struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * kSize; }
  double py(double y) const { return kMargin + kSize - (y - y0) / (y1 - y0) * kSize; }
};

std::ostringstream svg_open() {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  const double full = kSize + 2.0 * kMargin;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << full << "\" height=\"" << full << "\" viewBox=\"0 0 "
     << full << ' ' << full << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os;
}

void polyline(std::ostringstream& os, const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys,
              const char* stroke, double width, bool closed = false) {
  if (xs.size() == 1) {
    os << "<circle cx=\"" << f.px(xs[0]) << "\" cy=\"" << f.py(ys[0]) << "\" r=\"3\" fill=\"" << stroke << "\"/>\n";
    return;
  }
  os << '<' << (closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
     << width << "\" points=\"";
  for (std::size_t k = 0; k < xs.size(); ++k) os << (k ? " " : "") << f.px(xs[k]) << ',' << f.py(ys[k]);
  os << "\"/>\n";
}

void text(std::ostringstream& os, double x, double y, const std::string& s, const char* anchor = "middle") {
  os << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\""
     << anchor << "\">" << s << "</text>\n";
}

std::string label(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

std::filesystem::path write(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::ConfigError, "cannot write " + path.string());
  out << content;
  return path;
}

}  // namespace

std::string trajectories_svg(const RunLog& log, const ConvexPolygon& arena) {
  require_data(log);
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
  if (!arena.is_empty()) {
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -std::numeric_limits<double>::infinity();
    for (const Point& v : arena.vertices()) {
      x0 = std::min(x0, v.x());
      x1 = std::max(x1, v.x());
      y0 = std::min(y0, v.y());
      y1 = std::max(y1, v.y());
    }
  }
  // Square frame so distances are not distorted.
  const double half = 0.5 * std::max(x1 - x0, y1 - y0);
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const Frame f{cx - half, cx + half, cy - half, cy + half};

  auto os = svg_open();
  if (!arena.is_empty()) {
    std::vector<double> ax, ay;
    for (const Point& v : arena.vertices()) {
      ax.push_back(v.x());
      ay.push_back(v.y());
    }
    polyline(os, f, ax, ay, "black", 1.5, true);
  }
  const bool lloyd = log.mode == RunMode::LloydPeriodic;
  for (std::size_t i = 0; i < log.agents; ++i) {
    std::vector<double> xs, ys;
    if (lloyd) {
      if (i >= log.final_plans.size()) continue;
      for (const Point& p : log.final_plans[i].positions) {
        xs.push_back(p.x());
        ys.push_back(p.y());
      }
    } else {
      for (const StepRecord& s : log.steps) {
        xs.push_back(s.positions[i].x());
        ys.push_back(s.positions[i].y());
      }
    }
    if (xs.empty()) continue;
    polyline(os, f, xs, ys, color(i), 1.2, lloyd && xs.size() > 2);
    os << "<circle cx=\"" << f.px(xs.front()) << "\" cy=\"" << f.py(ys.front()) << "\" r=\"4\" fill=\"white\" stroke=\""
       << color(i) << "\"/>\n";
  }
  text(os, kMargin + kSize / 2, kMargin / 2, lloyd ? "periodic plans" : "closed-loop trajectories");
  os << "</svg>\n";
  return os.str();
}

std::string cost_svg(const RunLog& log) {
  require_data(log);
  const bool lloyd = log.mode == RunMode::LloydPeriodic || log.steps.empty();
  std::vector<double> xs, cost, ma_x, ma;
  if (lloyd) {
    cost = log.lloyd_costs;
    for (std::size_t j = 0; j < cost.size(); ++j) xs.push_back(static_cast<double>(j + 1));
  } else {
    cost = coverage_series(log);
    for (const StepRecord& s : log.steps) xs.push_back(static_cast<double>(s.t));
    const auto window = static_cast<std::size_t>(std::max(1L, log.horizon));
    ma = moving_average(cost, window);
    // Each average is drawn at the last step of its window.
    for (std::size_t t = 0; t < ma.size(); ++t) ma_x.push_back(xs[t + window - 1]);
  }
  double lo = *std::min_element(cost.begin(), cost.end());
  double hi = *std::max_element(cost.begin(), cost.end());
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5 * std::max(1e-6, std::abs(lo));
    hi += 0.5 * std::max(1e-6, std::abs(hi));
  }
  const double t0 = xs.front(), t1 = xs.size() > 1 ? xs.back() : xs.front() + 1.0;
  const Frame f{t0, t1, lo, hi};

  auto os = svg_open();
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\"" << kSize
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  polyline(os, f, xs, cost, "#1f77b4", 1.0);
  if (!ma.empty()) polyline(os, f, ma_x, ma, "#d62728", 2.0);
  text(os, kMargin + kSize / 2, kMargin + kSize + 35, lloyd ? "iteration" : "step");
  text(os, kMargin - 5, kMargin + 12, label(hi), "end");
  text(os, kMargin - 5, kMargin + kSize, label(lo), "end");
  text(os, kMargin, kMargin + kSize + 18, label(t0));
  text(os, kMargin + kSize, kMargin + kSize + 18, label(t1));
  text(os, kMargin + kSize / 2, kMargin / 2,
       lloyd ? "periodic coverage cost" : "coverage cost (blue) and moving average over T (red)");
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_plots(const RunLog& log, const ConvexPolygon& arena,
                                              const std::filesystem::path& dir) {
  require_data(log);
  std::filesystem::create_directories(dir);
  return {write(dir / "trajectories.svg", trajectories_svg(log, arena)), write(dir / "coverage_cost.svg", cost_svg(log))};
}

}  // namespace tvcov
