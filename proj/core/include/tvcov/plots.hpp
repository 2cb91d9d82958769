#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tvcov/coordinator.hpp"

namespace tvcov {

/// Agent paths over the arena: closed-loop positions for the MPC modes, the
/// final periodic plans for Lloyd runs.
std::string trajectories_svg(const RunLog& log, const ConvexPolygon& arena);

/// Coverage cost against time with its moving average over one period T; for
/// Lloyd runs the cost per iteration.
std::string cost_svg(const RunLog& log);

/// Writes trajectories.svg and coverage_cost.svg into `dir`. Throws EmptyLog
/// for a log without steps or iterations.
std::vector<std::filesystem::path> emit_plots(const RunLog& log, const ConvexPolygon& arena,
                                              const std::filesystem::path& dir);

}  // namespace tvcov
