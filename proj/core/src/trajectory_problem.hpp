#pragma once

#include <Eigen/SparseCore>

#include <optional>
#include <vector>

#include "tvcov/dynamics.hpp"
#include "tvcov/geometry.hpp"
#include "tvcov/nlp_solver.hpp"

namespace tvcov::detail {

/// Assembles the constraint part of a trajectory optimisation problem over
/// z = [x_0..x_L, u_0..u_{L-1}]: dynamics, optional closure, pinned entries,
/// boxes, position cells and an optional stacked trust region.
class TrajectoryProblem {
 public:
  enum class Closure { None, Periodic, SteadyTerminal };

  TrajectoryProblem(const AgentModel& model, int horizon);

  const VariableLayout& layout() const { return lay_; }

  void set_closure(Closure c) { closure_ = c; }
  void fix_state(int k, const Vec& value) { fixed_states_.emplace_back(k, value); }
  void fix_input(int k, const Vec& value) { fixed_inputs_.emplace_back(k, value); }
  void add_state_box(int k, const Box& box);
  void add_input_box(int k, const Box& box);
  void add_position_cell(int k, const ConvexPolygon& cell);
  /// |(x_0, u_0, ..., x_n, u_n) - center| <= radius over the first n+1 pairs.
  void set_trust_region(int pairs, const Vec& center, double radius);

  /// Objective plus everything registered so far.
  NlpProblem build(decltype(NlpProblem::objective) objective, const Vec& initial_guess) const;

  Vec pack(const Trajectory& traj) const;
  Trajectory unpack(const Vec& z, TrajectoryTag tag) const;

 private:
  void add_row(const std::vector<std::pair<int, double>>& coeffs, double rhs);

  const AgentModel& model_;
  VariableLayout lay_;
  Closure closure_ = Closure::None;
  std::vector<std::pair<int, Vec>> fixed_states_;
  std::vector<std::pair<int, Vec>> fixed_inputs_;
  std::vector<Eigen::Triplet<double>> rows_;
  std::vector<double> rhs_;
  std::optional<NlpProblem::TrustRegion> trust_;
};

}  // namespace tvcov::detail
