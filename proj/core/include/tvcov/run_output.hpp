#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "tvcov/coordinator.hpp"

namespace tvcov {

/// Mean of every length-`window` run of consecutive samples:
/// out[t] = mean(series[t .. t + window - 1]), size series.size() - window + 1
/// (empty when the series is shorter than the window).
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window);

/// Coverage cost per step.
std::vector<double> coverage_series(const RunLog& log);

/// Column order of steps.csv, one row per step and agent.
inline constexpr const char* kStepsCsvHeader =
    "t,agent,x,y,value,stage_cost,ref_distance,coverage_cost,min_distance,swapped,in_own_cells";
/// Column order of rounds.csv, one row per planning round and agent.
inline constexpr const char* kRoundsCsvHeader = "t,agent,vote,swapped,value,budget,kept_candidate";
/// Column order of lloyd.csv, one row per iteration.
inline constexpr const char* kLloydCsvHeader = "iteration,cost";

void write_steps_csv(const RunLog& log, std::ostream& out);
void write_rounds_csv(const RunLog& log, std::ostream& out);
void write_lloyd_csv(const RunLog& log, std::ostream& out);

/// Headline numbers of a run as a JSON object.
std::string summary_json(const RunLog& log);

struct OutputFiles {
  std::vector<std::filesystem::path> written;
};

/// Creates `dir` and writes the CSV logs, summary.json and, when `plots` is
/// set, the SVG figures.
OutputFiles write_run_outputs(const RunLog& log, const ConvexPolygon& arena, const std::filesystem::path& dir,
                              bool plots);

}  // namespace tvcov
