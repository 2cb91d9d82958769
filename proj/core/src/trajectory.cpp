#include <algorithm>

#include "tvcov/dynamics.hpp"
#include "tvcov/errors.hpp"

namespace tvcov {

std::string_view to_string(TrajectoryTag tag) {
  switch (tag) {
    case TrajectoryTag::Plain: return "plain";
    case TrajectoryTag::Periodic: return "periodic";
    case TrajectoryTag::TerminalSteadyState: return "terminal_steady_state";
  }
  return "plain";
}

namespace {

void check_shape(const Trajectory& traj) {
  if (traj.states.size() != traj.inputs.size() + 1) {
    fail(ErrorCode::ShapeMismatch, "trajectory needs one more state than inputs");
  }
}

}  // namespace

double dynamics_residual(const AgentModel& model, const Trajectory& traj) {
  check_shape(traj);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const Vec next = model.step(traj.states[k], traj.inputs[k]);
    worst = std::max(worst, (traj.states[k + 1] - next).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double tag_residual(const AgentModel& model, const Trajectory& traj) {
  check_shape(traj);
  const std::size_t len = traj.length();
  switch (traj.tag) {
    case TrajectoryTag::Plain:
      return 0.0;
    case TrajectoryTag::Periodic:
      return (traj.states.front() - traj.states.back()).lpNorm<Eigen::Infinity>();
    case TrajectoryTag::TerminalSteadyState: {
      if (len == 0) return 0.0;
      const Vec& last = traj.states[len - 1];
      return (model.step(last, traj.inputs[len - 1]) - last).lpNorm<Eigen::Infinity>();
    }
  }
  return 0.0;
}

std::vector<Point> trajectory_positions(const AgentModel& model, const Trajectory& traj,
                                        std::optional<std::size_t> count) {
  const std::size_t n = std::min(count.value_or(traj.states.size()), traj.states.size());
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(model.output(traj.states[k]));
  return out;
}

Trajectory steady_trajectory(const AgentModel& model, const Vec& x, std::size_t length,
                             TrajectoryTag tag) {
  const auto u = model.steady_input(x);
  if (!u) fail(ErrorCode::DomainError, "state is not a steady state of the model");
  Trajectory traj;
  traj.states.assign(length + 1, x);
  traj.inputs.assign(length, *u);
  traj.tag = tag;
  return traj;
}

}  // namespace tvcov
