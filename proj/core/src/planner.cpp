#include "tvcov/planner.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "trajectory_problem.hpp"

namespace tvcov {

using detail::TrajectoryProblem;

std::size_t extended_index(long k, std::size_t len, ShiftMode mode) {
  if (len == 0) fail(ErrorCode::BadShift, "indexing an empty sequence");
  const long l = static_cast<long>(len);
  if (mode == ShiftMode::Periodic) return static_cast<std::size_t>(((k % l) + l) % l);
  if (k < 0) fail(ErrorCode::BadShift, "negative index into a nonperiodic sequence");
  return static_cast<std::size_t>(std::min(k, l - 1));
}

ShiftMode shift_mode_for(TrajectoryTag tag) {
  return tag == TrajectoryTag::Periodic ? ShiftMode::Periodic : ShiftMode::Nonperiodic;
}

Trajectory shift(const Trajectory& traj, long n, ShiftMode mode) {
  const long len = static_cast<long>(traj.length());
  if (n < 0 || n > len) fail(ErrorCode::BadShift, "shift amount outside [0, length]");
  if (traj.states.size() != traj.inputs.size() + 1) {
    fail(ErrorCode::ShapeMismatch, "trajectory needs one more state than inputs");
  }
  Trajectory out;
  out.tag = traj.tag;
  out.inputs = shift_sequence(traj.inputs, n, mode);
  const std::vector<Vec> head(traj.states.begin(), traj.states.end() - 1);
  out.states = shift_sequence(head, n, mode);
  // The closing state is the successor of the new last entry.
  const long last = mode == ShiftMode::Periodic ? (len - 1 + n) % len : std::min(len - 1 + n, len - 1);
  out.states.push_back(traj.states[static_cast<std::size_t>(last + 1)]);
  return out;
}

PartitionSlice shift(const PartitionSlice& slice, long n, ShiftMode mode) {
  return {shift_sequence(slice.cells, n, mode), shift_sequence(slice.eroded, n, mode),
          shift_sequence(slice.interior, n, mode)};
}

PartitionSequence shift(const PartitionSequence& seq, long n, ShiftMode mode) {
  return {shift_sequence(seq.cells, n, mode), shift_sequence(seq.eroded, n, mode),
          shift_sequence(seq.interior, n, mode)};
}

Vec reference_state(const Trajectory& traj, long k) {
  const long len = static_cast<long>(traj.length());
  if (traj.tag == TrajectoryTag::Periodic) return traj.states[extended_index(k, len, ShiftMode::Periodic)];
  if (k < 0) fail(ErrorCode::BadShift, "negative reference index");
  return traj.states[static_cast<std::size_t>(std::min(k, len))];
}

Vec reference_input(const Trajectory& traj, long k) {
  return traj.inputs[extended_index(k, traj.length(), shift_mode_for(traj.tag))];
}

CouplingBudget coupling_budget(double v, double v_max, double l_v, double decay, long k) {
  if (!(decay > 0.0 && decay < 1.0)) fail(ErrorCode::BudgetDomain, "decay must lie in (0, 1)");
  if (!(l_v > 0.0)) fail(ErrorCode::BudgetDomain, "L_V must be positive");
  if (k < 0) fail(ErrorCode::BudgetDomain, "K must be nonnegative");
  if (!(v >= 0.0)) fail(ErrorCode::BudgetDomain, "tracking value must be nonnegative");
  if (v > v_max) fail(ErrorCode::BudgetDomain, "tracking value exceeds V_max");
  CouplingBudget b;
  b.value = (v_max - std::pow(decay, static_cast<double>(k)) * v) / l_v;
  b.v_max = v_max;
  b.l_v = l_v;
  b.decay = decay;
  b.k = k;
  b.v = v;
  return b;
}

ReferencePlan evaluate_plan(const AgentModel& model, const Trajectory& traj,
                            const PartitionSlice& slice, const DensityField& field, long t0,
                            const QuadratureOptions& quadrature) {
  if (traj.length() != slice.horizon()) {
    fail(ErrorCode::ShapeMismatch, "plan and partition slice differ in length");
  }
  ReferencePlan plan;
  plan.trajectory = traj;
  plan.positions = trajectory_positions(model, traj, traj.length());
  const HorizonCost hc = horizon_cost(field, plan.positions, slice.cells, t0, quadrature);
  plan.coverage_value = hc.integral;
  plan.objective = hc.weighted;
  plan.partition_used = slice;
  plan.t0 = t0;
  return plan;
}

double reachability_violation(const AgentModel& model, const Trajectory& traj,
                              const PartitionSlice& slice, double epsilon) {
  if (traj.length() != slice.horizon()) {
    fail(ErrorCode::ShapeMismatch, "plan and partition slice differ in length");
  }
  double worst = std::max(dynamics_residual(model, traj), tag_residual(model, traj));
  const Box xs = model.state_box().shrunk(epsilon);
  const Box us = model.input_box().shrunk(epsilon);
  for (std::size_t k = 0; k < traj.length(); ++k) {
    worst = std::max({worst, xs.violation(traj.states[k]), us.violation(traj.inputs[k])});
    const ConvexPolygon& cell = slice.interior[k];
    if (cell.is_empty()) return std::numeric_limits<double>::infinity();
    const Point p = model.output(traj.states[k]);
    for (const Halfplane& h : cell.halfplanes()) worst = std::max(worst, h.signed_distance(p));
  }
  return worst;
}

namespace {

struct Targets {
  std::vector<double> mass;
  std::vector<Point> centroid;
};

Targets coverage_targets(const PartitionSlice& slice, const DensityField& field, long t0,
                         const QuadratureOptions& q) {
  Targets t;
  for (std::size_t k = 0; k < slice.horizon(); ++k) {
    const MassCentroid mc = mass_centroid(field, slice.cells[k], t0 + static_cast<long>(k), q);
    t.mass.push_back(mc.mass);
    t.centroid.push_back(mc.centroid);
  }
  return t;
}

/// sum_k m_k |C x_k - c_k|^2 over k < T.
decltype(NlpProblem::objective) coverage_objective(const AgentModel& model, const VariableLayout& lay,
                                                   Targets targets) {
  const Mat c = model.output_matrix();
  const Mat ctc = c.transpose() * c;
  return [c, ctc, lay, targets = std::move(targets)](const Vec& z, Vec& grad, SpMat* hess) {
    grad = Vec::Zero(lay.num_vars());
    std::vector<Eigen::Triplet<double>> trip;
    double value = 0.0;
    const int n = lay.state_dim;
    for (std::size_t k = 0; k < targets.mass.size(); ++k) {
      const double m = targets.mass[k];
      if (m == 0.0) continue;
      const int off = lay.state(static_cast<int>(k));
      const Eigen::Vector2d e = c * z.segment(off, n) - targets.centroid[k];
      value += m * e.squaredNorm();
      grad.segment(off, n) += 2.0 * m * c.transpose() * e;
      if (hess) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (ctc(i, j) != 0.0) trip.emplace_back(off + i, off + j, 2.0 * m * ctc(i, j));
          }
        }
      }
    }
    if (hess) {
      hess->resize(lay.num_vars(), lay.num_vars());
      hess->setFromTriplets(trip.begin(), trip.end());
    }
    return value;
  };
}

Trajectory default_guess(const AgentModel& model, const PartitionSlice& slice, double epsilon,
                         TrajectoryTag tag) {
  const Box xs = model.state_box().shrunk(epsilon);
  const Box us = model.input_box().shrunk(epsilon);
  Trajectory g;
  g.tag = tag;
  for (std::size_t k = 0; k < slice.horizon(); ++k) {
    const Vec x = model.rest_state(slice.interior[k].area_centroid()).cwiseMax(xs.lower).cwiseMin(xs.upper);
    g.states.push_back(x);
    g.inputs.push_back(model.steady_input(x).value_or(us.center()));
  }
  g.states.push_back(tag == TrajectoryTag::Periodic ? g.states.front() : g.states.back());
  return g;
}

using Configure = std::function<void(TrajectoryProblem&)>;

struct PlanningNlp {
  TrajectoryProblem tp;
  decltype(NlpProblem::objective) objective;
  std::optional<Vec> cand_z;
  NlpProblem problem;
};

PlanningNlp build_planning_nlp(const AgentModel& model, const PartitionSlice& slice,
                               const DensityField& field, long t0,
                               const std::optional<Trajectory>& candidate,
                               TrajectoryProblem::Closure closure, TrajectoryTag tag,
                               const Configure& configure, const PlannerOptions& opts) {
  const int horizon = static_cast<int>(slice.horizon());
  if (horizon < 1) fail(ErrorCode::PlannerInfeasible, "empty partition slice");
  for (int k = 0; k < horizon; ++k) {
    if (slice.interior[static_cast<std::size_t>(k)].is_empty()) {
      fail(ErrorCode::PlannerInfeasible, "interior cell " + std::to_string(k) + " is empty");
    }
  }

  PlanningNlp nlp{TrajectoryProblem(model, horizon), {}, {}, {}};
  TrajectoryProblem& tp = nlp.tp;
  tp.set_closure(closure);
  const Box xs = model.state_box().shrunk(opts.epsilon);
  const Box us = model.input_box().shrunk(opts.epsilon);
  for (int k = 0; k < horizon; ++k) {
    tp.add_state_box(k, xs);
    tp.add_input_box(k, us);
    tp.add_position_cell(k, slice.interior[static_cast<std::size_t>(k)]);
  }
  if (configure) configure(tp);

  nlp.objective = coverage_objective(model, tp.layout(),
                                     coverage_targets(slice, field, t0, opts.quadrature));
  if (candidate && candidate->length() == slice.horizon()) {
    Trajectory c = *candidate;
    c.tag = tag;
    nlp.cand_z = tp.pack(c);
  }
  const Vec guess = nlp.cand_z ? *nlp.cand_z : tp.pack(default_guess(model, slice, opts.epsilon, tag));
  nlp.problem = tp.build(nlp.objective, guess);
  return nlp;
}

ReferencePlan run_planner(const AgentModel& model, const PartitionSlice& slice,
                          const DensityField& field, long t0, const std::optional<Trajectory>& candidate,
                          TrajectoryProblem::Closure closure, TrajectoryTag tag,
                          const Configure& configure, const PlannerOptions& opts) {
  const PlanningNlp nlp =
      build_planning_nlp(model, slice, field, t0, candidate, closure, tag, configure, opts);
  const NlpProblem& problem = nlp.problem;

  bool cand_ok = false;
  double cand_value = std::numeric_limits<double>::infinity();
  if (nlp.cand_z) {
    cand_ok = max_violation(problem, *nlp.cand_z) <= opts.reach_tol;
    Vec g;
    if (cand_ok) cand_value = nlp.objective(*nlp.cand_z, g, nullptr);
  }

  const NlpSolution sol = solve(problem, opts.nlp);
  const bool sol_ok = std::isfinite(sol.objective) && max_violation(problem, sol.z) <= opts.reach_tol;

  Vec chosen;
  bool kept = false;
  if (cand_ok && (!sol_ok || sol.objective >= cand_value - opts.tie_tol * (1.0 + std::abs(cand_value)))) {
    chosen = *nlp.cand_z;
    kept = true;
  } else if (sol_ok) {
    chosen = sol.z;
  } else {
    fail(ErrorCode::PlannerInfeasible,
         "solver status " + std::string(to_string(sol.status)) + ", violation " +
             std::to_string(sol.max_violation) + " and no feasible candidate");
  }
  ReferencePlan plan =
      evaluate_plan(model, nlp.tp.unpack(chosen, tag), slice, field, t0, opts.quadrature);
  plan.solver_status = sol.status;
  plan.kept_candidate = kept;
  return plan;
}

}  // namespace

NlpProblem periodic_planning_problem(const AgentModel& model, const PartitionSlice& slice,
                                     const DensityField& field, long t0,
                                     const std::optional<Trajectory>& guess,
                                     const PlannerOptions& opts) {
  return build_planning_nlp(model, slice, field, t0, guess, TrajectoryProblem::Closure::Periodic,
                            TrajectoryTag::Periodic, nullptr, opts)
      .problem;
}

ReferencePlan plan_periodic(const AgentModel& model, const PartitionSlice& slice,
                            const DensityField& field, long t0,
                            const std::optional<Trajectory>& candidate, const PlannerOptions& opts) {
  return run_planner(model, slice, field, t0, candidate, TrajectoryProblem::Closure::Periodic,
                     TrajectoryTag::Periodic, nullptr, opts);
}

ReferencePlan plan_periodic_coupled(const AgentModel& model, const PartitionSlice& slice,
                                    const DensityField& field, long t0, const ReferencePlan& prev,
                                    long k_interval, int n_track, double budget,
                                    const PlannerOptions& opts) {
  if (prev.trajectory.tag != TrajectoryTag::Periodic) {
    fail(ErrorCode::DomainError, "coupled periodic planning needs a periodic previous plan");
  }
  if (n_track < 0 || n_track >= static_cast<int>(slice.horizon())) {
    fail(ErrorCode::DomainError, "tracking horizon must be shorter than the plan horizon");
  }
  if (!(budget >= 0.0)) fail(ErrorCode::BudgetDomain, "coupling budget must be nonnegative");
  const long len = static_cast<long>(prev.horizon());
  const Trajectory candidate = shift(prev.trajectory, k_interval % len, ShiftMode::Periodic);

  if (budget <= 1e-12) {
    // The trust region collapses onto the shifted previous plan.
    if (reachability_violation(model, candidate, slice, opts.epsilon) > opts.reach_tol) {
      fail(ErrorCode::PlannerInfeasible, "zero budget and the shifted plan is not reachable");
    }
    ReferencePlan plan = evaluate_plan(model, candidate, slice, field, t0, opts.quadrature);
    plan.kept_candidate = true;
    return plan;
  }

  const int width = model.state_dim() + model.input_dim();
  Vec center((n_track + 1) * width);
  for (int k = 0; k <= n_track; ++k) {
    center.segment(k * width, model.state_dim()) = reference_state(prev.trajectory, k_interval + k);
    center.segment(k * width + model.state_dim(), model.input_dim()) =
        reference_input(prev.trajectory, k_interval + k);
  }
  return run_planner(
      model, slice, field, t0, candidate, TrajectoryProblem::Closure::Periodic, TrajectoryTag::Periodic,
      [&](TrajectoryProblem& tp) { tp.set_trust_region(n_track + 1, center, budget); }, opts);
}

ReferencePlan plan_nonperiodic(const AgentModel& model, const PartitionSlice& slice,
                               const DensityField& field, long t0, const ReferencePlan& prev,
                               long k_interval, int n_track, const PlannerOptions& opts) {
  if (prev.trajectory.tag != TrajectoryTag::TerminalSteadyState) {
    fail(ErrorCode::DomainError, "nonperiodic planning needs a steady-state terminated previous plan");
  }
  if (n_track < 0 || n_track >= static_cast<int>(slice.horizon())) {
    fail(ErrorCode::DomainError, "tracking horizon must be shorter than the plan horizon");
  }
  if (slice.horizon() != prev.horizon()) {
    fail(ErrorCode::ShapeMismatch, "previous plan and slice differ in length");
  }
  const long len = static_cast<long>(prev.horizon());
  const Trajectory candidate = shift(prev.trajectory, std::min(k_interval, len), ShiftMode::Nonperiodic);
  return run_planner(
      model, slice, field, t0, candidate, TrajectoryProblem::Closure::SteadyTerminal,
      TrajectoryTag::TerminalSteadyState,
      [&](TrajectoryProblem& tp) {
        for (int k = 0; k <= n_track; ++k) {
          tp.fix_state(k, reference_state(prev.trajectory, k_interval + k));
          tp.fix_input(k, reference_input(prev.trajectory, k_interval + k));
        }
      },
      opts);
}

}  // namespace tvcov
