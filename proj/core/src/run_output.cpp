#include "tvcov/run_output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "tvcov/plots.hpp"

namespace tvcov {

namespace {

// Shortest representation that reads back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::filesystem::path write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::ConfigError, "cannot write " + path.string());
  writer(out);
  return path;
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
  if (window == 0) fail(ErrorCode::DomainError, "moving average window must be positive");
  std::vector<double> out;
  if (series.size() < window) return out;
  out.reserve(series.size() - window + 1);
  for (std::size_t t = 0; t + window <= series.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = t; k < t + window; ++k) sum += series[k];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

std::vector<double> coverage_series(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const StepRecord& s : log.steps) out.push_back(s.coverage_cost);
  return out;
}

void write_steps_csv(const RunLog& log, std::ostream& out) {
  out << kStepsCsvHeader << "\n";
  for (const StepRecord& s : log.steps) {
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      out << s.t << ',' << i << ',' << num(s.positions[i].x()) << ',' << num(s.positions[i].y()) << ','
          << num(s.values[i]) << ',' << num(s.stage_costs[i]) << ',' << num(s.ref_distance[i]) << ','
          << num(s.coverage_cost) << ',' << num(s.min_distance) << ',' << (s.swapped ? 1 : 0) << ','
          << (s.in_own_cells ? 1 : 0) << "\n";
    }
  }
}

void write_rounds_csv(const RunLog& log, std::ostream& out) {
  out << kRoundsCsvHeader << "\n";
  for (const RoundRecord& r : log.rounds) {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      // Votes are absent in the first round.
      const std::string vote = r.votes.empty() ? "" : (r.votes[i] ? "1" : "0");
      out << r.t << ',' << i << ',' << vote << ',' << (r.swapped ? 1 : 0) << ',' << num(r.values[i]) << ','
          << num(r.budgets[i]) << ',' << (r.kept_candidate[i] ? 1 : 0) << "\n";
    }
  }
}

void write_lloyd_csv(const RunLog& log, std::ostream& out) {
  out << kLloydCsvHeader << "\n";
  for (std::size_t j = 0; j < log.lloyd_costs.size(); ++j) out << j + 1 << ',' << num(log.lloyd_costs[j]) << "\n";
}

std::string summary_json(const RunLog& log) {
  nlohmann::json j;
  j["mode"] = std::string(to_string(log.mode));
  j["seed"] = log.seed;
  j["agents"] = log.agents;
  j["horizon"] = log.horizon;
  j["k_interval"] = log.k_interval;
  j["steps"] = log.steps.size();
  j["rounds"] = log.rounds.size();
  j["swaps"] = log.swap_count();
  j["first_swap_step"] = log.first_swap_step();
  j["aborted"] = log.aborted;
  j["abort_code"] = log.abort_code ? std::string(to_string(*log.abort_code)) : "";
  j["abort_reason"] = log.abort_reason;
  j["abort_step"] = log.abort_step;

  if (!log.steps.empty()) {
    double min_distance = std::numeric_limits<double>::infinity();
    double max_value = 0.0;
    bool in_cells = true;
    for (const StepRecord& s : log.steps) {
      min_distance = std::min(min_distance, s.min_distance);
      for (double v : s.values) max_value = std::max(max_value, v);
      in_cells = in_cells && s.in_own_cells;
    }
    double max_post_update = 0.0;
    for (const RoundRecord& r : log.rounds) {
      for (double v : r.values) max_post_update = std::max(max_post_update, v);
    }
    const auto cost = coverage_series(log);
    const auto ma = moving_average(cost, static_cast<std::size_t>(std::max(1L, log.horizon)));
    double mean = 0.0;
    for (double c : cost) mean += c;
    j["min_distance"] = finite_or_null(min_distance);
    j["max_tracking_value"] = max_value;
    j["max_post_update_value"] = max_post_update;
    j["always_in_own_cells"] = in_cells;
    j["mean_coverage_cost"] = mean / static_cast<double>(cost.size());
    j["final_coverage_cost"] = cost.back();
    j["final_moving_average"] = ma.empty() ? nlohmann::json(nullptr) : nlohmann::json(ma.back());
  }
  if (log.mode == RunMode::LloydPeriodic) {
    j["lloyd_iterations"] = log.lloyd_iterations;
    j["converged"] = log.converged;
    j["lloyd_final_cost"] = log.lloyd_costs.empty() ? nlohmann::json(nullptr) : nlohmann::json(log.lloyd_costs.back());
  }
  return j.dump(2) + "\n";
}

OutputFiles write_run_outputs(const RunLog& log, const ConvexPolygon& arena, const std::filesystem::path& dir,
                              bool plots) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::ConfigError, "cannot create output directory " + dir.string() + ": " + ec.message());
  OutputFiles files;
  if (log.mode == RunMode::LloydPeriodic) {
    files.written.push_back(write_file(dir / "lloyd.csv", [&](std::ostream& o) { write_lloyd_csv(log, o); }));
  } else {
    files.written.push_back(write_file(dir / "steps.csv", [&](std::ostream& o) { write_steps_csv(log, o); }));
    files.written.push_back(write_file(dir / "rounds.csv", [&](std::ostream& o) { write_rounds_csv(log, o); }));
  }
  files.written.push_back(write_file(dir / "summary.json", [&](std::ostream& o) { o << summary_json(log); }));
  const bool has_data = !log.steps.empty() || !log.lloyd_costs.empty();
  if (plots && has_data) {
    for (auto& p : emit_plots(log, arena, dir)) files.written.push_back(p);
  }
  return files;
}

}  // namespace tvcov
