#pragma once

#include <optional>
#include <vector>

#include "tvcov/density.hpp"
#include "tvcov/dynamics.hpp"
#include "tvcov/errors.hpp"
#include "tvcov/geometry.hpp"
#include "tvcov/nlp_solver.hpp"

namespace tvcov {

enum class ShiftMode { Periodic, Nonperiodic };

/// Drops the first n entries. Periodic mode appends them again (rotation);
/// nonperiodic mode repeats the last entry n times.
template <class T>
std::vector<T> shift_sequence(const std::vector<T>& seq, long n, ShiftMode mode) {
  const long len = static_cast<long>(seq.size());
  if (n < 0 || n > len) fail(ErrorCode::BadShift, "shift amount outside [0, length]");
  std::vector<T> out;
  out.reserve(seq.size());
  for (long k = 0; k < len; ++k) {
    const long src = mode == ShiftMode::Periodic ? (k + n) % len : std::min(k + n, len - 1);
    out.push_back(seq[static_cast<std::size_t>(src)]);
  }
  return out;
}

/// Index into a length-`len` sequence extended past its end: cyclically in
/// periodic mode, by holding the last entry otherwise.
std::size_t extended_index(long k, std::size_t len, ShiftMode mode);

ShiftMode shift_mode_for(TrajectoryTag tag);

/// Shifts a reference trajectory: entries r_k = (x_k, u_k), k < L, move as in
/// shift_sequence and the closing state is rebuilt.
Trajectory shift(const Trajectory& traj, long n, ShiftMode mode);
PartitionSlice shift(const PartitionSlice& slice, long n, ShiftMode mode);
PartitionSequence shift(const PartitionSequence& seq, long n, ShiftMode mode);

/// State and input of a reference at extended index k.
Vec reference_state(const Trajectory& traj, long k);
Vec reference_input(const Trajectory& traj, long k);

/// A planned reference together with the partition it was planned against.
struct ReferencePlan {
  Trajectory trajectory;
  std::vector<Point> positions;  ///< C x_k, k < T
  double coverage_value = 0.0;   ///< full horizon cost, residual included
  double objective = 0.0;        ///< sum_k m_k |p_k - c_k|^2
  PartitionSlice partition_used;
  long t0 = 0;                   ///< density time of entry 0
  NlpStatus solver_status = NlpStatus::OptimalLocal;
  bool kept_candidate = false;   ///< the shifted candidate beat the solver

  std::size_t horizon() const { return trajectory.length(); }
};

struct PlannerOptions {
  double epsilon = 0.005;     ///< margin removed from the state and input boxes
  double reach_tol = 1e-7;    ///< tolerance for accepting a plan as reachable
  double tie_tol = 1e-12;     ///< relative; ties keep the candidate
  NlpOptions nlp = [] {
    NlpOptions o;
    o.feas_tol = 1e-9;
    return o;
  }();
  QuadratureOptions quadrature;
};

struct CouplingBudget {
  double value = 0.0;
  double v_max = 0.0;
  double l_v = 0.0;
  double decay = 0.0;
  long k = 0;
  double v = 0.0;
};

/// (V_max - decay^K V) / L_V.
CouplingBudget coupling_budget(double v, double v_max, double l_v, double decay, long k);

/// Coverage-optimal periodic reference for one agent over slice.horizon()
/// steps. `candidate`, when given, seeds the solver and is returned instead
/// whenever the solver does not improve on it.
ReferencePlan plan_periodic(const AgentModel& model, const PartitionSlice& slice,
                            const DensityField& field, long t0,
                            const std::optional<Trajectory>& candidate,
                            const PlannerOptions& opts = {});

/// plan_periodic plus |r_new[0..N] - r_prev[K..K+N]| <= budget in the
/// stacked (x, u) norm. The shifted previous plan is the candidate.
ReferencePlan plan_periodic_coupled(const AgentModel& model, const PartitionSlice& slice,
                                    const DensityField& field, long t0,
                                    const ReferencePlan& prev, long k_interval, int n_track,
                                    double budget, const PlannerOptions& opts = {});

/// Nonperiodic reference ending in a steady state, with the first N+1
/// entries pinned to entries K..K+N of the previous plan.
ReferencePlan plan_nonperiodic(const AgentModel& model, const PartitionSlice& slice,
                               const DensityField& field, long t0, const ReferencePlan& prev,
                               long k_interval, int n_track, const PlannerOptions& opts = {});

/// The periodic planning NLP without solving it, seeded with `guess` or a
/// rest trajectory at the interior-cell centroids. Used for diagnostics.
NlpProblem periodic_planning_problem(const AgentModel& model, const PartitionSlice& slice,
                                     const DensityField& field, long t0,
                                     const std::optional<Trajectory>& guess,
                                     const PlannerOptions& opts = {});

/// Builds a plan record (positions and both cost forms) for a given trajectory.
ReferencePlan evaluate_plan(const AgentModel& model, const Trajectory& traj,
                            const PartitionSlice& slice, const DensityField& field, long t0,
                            const QuadratureOptions& quadrature = {});

/// Largest violation of the reachability conditions: dynamics, tag closure,
/// interior boxes and interior cells.
double reachability_violation(const AgentModel& model, const Trajectory& traj,
                              const PartitionSlice& slice, double epsilon);

}  // namespace tvcov
