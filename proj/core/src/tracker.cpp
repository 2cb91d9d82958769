#include "tvcov/tracker.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "trajectory_problem.hpp"
#include "tvcov/errors.hpp"
#include "tvcov/planner.hpp"

namespace tvcov {

using detail::TrajectoryProblem;

double TrackerConstants::alpha1() const {
  return Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().minCoeff();
}

double TrackerConstants::alpha2() const {
  return Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().maxCoeff();
}

void TrackerConstants::validate(int state_dim, int input_dim) const {
  if (q.rows() != state_dim || q.cols() != state_dim || r.rows() != input_dim || r.cols() != input_dim) {
    fail(ErrorCode::DimensionMismatch, "tracking weights do not match the model");
  }
  if (!(alpha1() > 0.0) || !(Eigen::SelfAdjointEigenSolver<Mat>(r).eigenvalues().minCoeff() > 0.0)) {
    fail(ErrorCode::DomainError, "tracking weights must be positive definite");
  }
  if (!(alpha_n > 0.0 && alpha_n < 1.0)) fail(ErrorCode::DomainError, "alpha_N must lie in (0, 1)");
  if (!(gamma_bar > 1.0)) fail(ErrorCode::DomainError, "gamma_bar must exceed 1");
  if (!(v_max > 0.0) || !(l_v > 0.0) || !(l_f > 0.0)) {
    fail(ErrorCode::DomainError, "V_max, L_V and L_f must be positive");
  }
  if (horizon < 2) fail(ErrorCode::DomainError, "tracking horizon must be at least 2");
  if (k_interval < 1) fail(ErrorCode::DomainError, "planner interval must be at least 1");
}

ReferenceSegment reference_segment(const Trajectory& plan, long offset, int n) {
  ReferenceSegment seg;
  for (int k = 0; k <= n; ++k) {
    seg.states.push_back(reference_state(plan, offset + k));
    seg.inputs.push_back(reference_input(plan, offset + k));
  }
  return seg;
}

double stage_cost(const Vec& x, const Vec& u, const Vec& xr, const Vec& ur,
                  const TrackerConstants& consts) {
  const Vec dx = x - xr;
  const Vec du = u - ur;
  return dx.dot(consts.q * dx) + du.dot(consts.r * du);
}

namespace {

decltype(NlpProblem::objective) tracking_objective(const VariableLayout& lay, const ReferenceSegment& ref,
                                                   const TrackerConstants& consts) {
  return [lay, ref, q = consts.q, r = consts.r](const Vec& z, Vec& grad, SpMat* hess) {
    grad = Vec::Zero(lay.num_vars());
    std::vector<Eigen::Triplet<double>> trip;
    double value = 0.0;
    const int n = lay.state_dim, m = lay.input_dim;
    for (int k = 0; k < lay.horizon; ++k) {
      const Vec dx = z.segment(lay.state(k), n) - ref.states[k];
      const Vec du = z.segment(lay.input(k), m) - ref.inputs[k];
      const Vec qdx = q * dx, rdu = r * du;
      value += dx.dot(qdx) + du.dot(rdu);
      grad.segment(lay.state(k), n) += 2.0 * qdx;
      grad.segment(lay.input(k), m) += 2.0 * rdu;
      if (hess) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (q(i, j) != 0.0) trip.emplace_back(lay.state(k) + i, lay.state(k) + j, 2.0 * q(i, j));
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            if (r(i, j) != 0.0) trip.emplace_back(lay.input(k) + i, lay.input(k) + j, 2.0 * r(i, j));
      }
    }
    if (hess) {
      hess->resize(lay.num_vars(), lay.num_vars());
      hess->setFromTriplets(trip.begin(), trip.end());
    }
    return value;
  };
}

Trajectory rollout(const AgentModel& model, const Vec& x0, const std::vector<Vec>& inputs, int n) {
  Trajectory t;
  t.states.push_back(x0);
  for (int k = 0; k < n; ++k) {
    const Vec u = inputs[k].cwiseMax(model.input_box().lower).cwiseMin(model.input_box().upper);
    t.inputs.push_back(u);
    t.states.push_back(model.step(t.states.back(), u));
  }
  return t;
}

}  // namespace

TrackerSolution solve_tracking(const AgentModel& model, const Vec& x_now, const ReferenceSegment& ref,
                               std::span<const ConvexPolygon> eroded, const TrackerConstants& consts,
                               const std::optional<Trajectory>& warm_start, const TrackerOptions& opts) {
  const int n = consts.horizon;
  if (ref.horizon() != n) fail(ErrorCode::ShapeMismatch, "reference segment must hold N+1 entries");
  if (static_cast<int>(eroded.size()) < n) fail(ErrorCode::ShapeMismatch, "need N eroded cells");
  if (!model.state_box().contains(x_now, opts.membership_tol)) {
    fail(ErrorCode::TrackerInfeasible, "current state outside the state box");
  }
  if (eroded[0].is_empty() || !contains(eroded[0], model.output(x_now), opts.membership_tol)) {
    fail(ErrorCode::TrackerInfeasible, "current position outside its eroded cell");
  }

  TrajectoryProblem tp(model, n);
  tp.fix_state(0, x_now);
  for (int k = 0; k < n; ++k) {
    tp.add_input_box(k, model.input_box());
    if (k == 0) continue;  // x_0 is fixed and already checked
    if (eroded[k].is_empty()) {
      fail(ErrorCode::TrackerInfeasible, "eroded cell " + std::to_string(k) + " is empty");
    }
    tp.add_state_box(k, model.state_box());
    tp.add_position_cell(k, eroded[k]);
  }
  auto objective = tracking_objective(tp.layout(), ref, consts);

  std::optional<Vec> warm_z;
  if (warm_start && static_cast<int>(warm_start->length()) == n) {
    Trajectory w = *warm_start;
    w.tag = TrajectoryTag::Plain;
    warm_z = tp.pack(w);
  }
  const Vec guess = warm_z ? *warm_z : tp.pack(rollout(model, x_now, ref.inputs, n));
  const NlpProblem problem = tp.build(objective, guess);

  double warm_value = std::numeric_limits<double>::infinity();
  bool warm_ok = false;
  if (warm_z) {
    warm_ok = max_violation(problem, *warm_z) <= opts.membership_tol;
    Vec g;
    if (warm_ok) warm_value = objective(*warm_z, g, nullptr);
  }

  const NlpSolution sol = solve(problem, opts.nlp);
  const double sol_viol = max_violation(problem, sol.z);
  const bool sol_ok = std::isfinite(sol.objective) && sol_viol <= opts.membership_tol;

  TrackerSolution out;
  out.status = sol.status;
  Vec chosen;
  if (warm_ok && (!sol_ok || sol.objective > warm_value)) {
    chosen = *warm_z;
    out.kept_candidate = true;
  } else if (sol_ok) {
    chosen = sol.z;
  } else {
    fail(ErrorCode::TrackerInfeasible, "tracking solver status " + std::string(to_string(sol.status)) +
                                           ", violation " + std::to_string(sol_viol));
  }
  out.trajectory = tp.unpack(chosen, TrajectoryTag::Plain);
  Vec g;
  out.value = std::max(0.0, objective(chosen, g, nullptr));
  out.max_violation = max_violation(problem, chosen);
  out.first_input = out.trajectory.inputs.front();
  return out;
}

Vec closed_loop_step(const AgentModel& model, const Vec& x_now, const TrackerSolution& sol) {
  return model.step(x_now, sol.first_input);
}

Trajectory candidate_trajectory(const AgentModel& model, const TrackerSolution& prev,
                                const ReferenceSegment& ref) {
  const int n = static_cast<int>(prev.trajectory.length());
  if (n < 2) fail(ErrorCode::DomainError, "candidate construction needs N >= 2");
  if (ref.horizon() != n) fail(ErrorCode::ShapeMismatch, "reference segment must hold N+1 entries");
  Trajectory c;
  c.tag = TrajectoryTag::Plain;
  for (int k = 1; k <= n - 2; ++k) c.inputs.push_back(prev.trajectory.inputs[k]);
  c.inputs.push_back(ref.inputs[n - 1]);
  c.inputs.push_back(ref.inputs[n]);
  for (int k = 1; k <= n - 1; ++k) c.states.push_back(prev.trajectory.states[k]);
  c.states.push_back(model.step(c.states.back(), ref.inputs[n - 1]));
  c.states.push_back(model.step(c.states.back(), ref.inputs[n]));
  return c;
}

bool check_update_condition(const AgentModel& model, const Trajectory& candidate,
                            std::span<const ConvexPolygon> eroded, double tol) {
  if (eroded.size() < candidate.states.size()) {
    fail(ErrorCode::ShapeMismatch, "need one eroded cell per candidate state");
  }
  for (std::size_t k = 0; k < candidate.states.size(); ++k) {
    if (!model.state_box().contains(candidate.states[k], tol)) return false;
    if (eroded[k].is_empty()) return false;
    if (!contains(eroded[k], model.output(candidate.states[k]), tol)) return false;
  }
  return true;
}

double n_star_raw(double weight_ratio, double l_f, double gamma_bar, double alpha_n) {
  if (!(gamma_bar > 1.0) || !(gamma_bar > alpha_n) || !(alpha_n > 0.0)) {
    fail(ErrorCode::DomainError, "need gamma_bar > 1, gamma_bar > alpha_N > 0");
  }
  if (!(weight_ratio > 0.0) || !(l_f > 0.0)) fail(ErrorCode::DomainError, "ratios must be positive");
  const double num = std::log(weight_ratio * l_f * l_f * gamma_bar * gamma_bar) - std::log(gamma_bar - alpha_n);
  const double den = std::log(gamma_bar) - std::log(gamma_bar - 1.0);
  return num / den;
}

int n_star(double weight_ratio, double l_f, double gamma_bar, double alpha_n) {
  const double raw = n_star_raw(weight_ratio, l_f, gamma_bar, alpha_n);
  return std::max(1, static_cast<int>(std::ceil(raw)));
}

int n_star(const TrackerConstants& consts) {
  return n_star(consts.alpha2() / consts.alpha1(), consts.l_f, consts.gamma_bar, consts.alpha_n);
}

double update_value_threshold(double alpha1, double alpha2, double l_f, double epsilon, double c_norm) {
  if (!(alpha1 > 0.0) || !(alpha2 >= alpha1) || !(l_f > 0.0) || !(epsilon > 0.0) || !(c_norm > 0.0)) {
    fail(ErrorCode::DomainError, "update bound inputs must be positive with alpha2 >= alpha1");
  }
  const double beta = alpha2 / alpha1 * (l_f * l_f + std::pow(l_f, 4));
  return alpha1 * epsilon * epsilon / ((1.0 + beta) * c_norm * c_norm);
}

long update_steps(double v_eps, double v_max, double decay) {
  if (!(v_eps > 0.0) || !(v_max > 0.0) || !(decay > 0.0 && decay < 1.0)) {
    fail(ErrorCode::DomainError, "need v_eps, v_max > 0 and decay in (0, 1)");
  }
  const double steps = (std::log(v_eps) - std::log(v_max)) / std::log(decay);
  return std::max(0L, static_cast<long>(std::ceil(steps)));
}

UpdateBounds finite_update_bounds(std::span<const TrackerConstants> consts, double epsilon,
                                  std::span<const double> c_norms) {
  if (consts.empty() || consts.size() != c_norms.size()) {
    fail(ErrorCode::DomainError, "need one output norm per agent");
  }
  UpdateBounds b;
  b.v_eps = std::numeric_limits<double>::infinity();
  double v_max = 0.0, decay = 0.0;
  for (std::size_t i = 0; i < consts.size(); ++i) {
    const auto& c = consts[i];
    const double v = update_value_threshold(c.alpha1(), c.alpha2(), c.l_f, epsilon, c_norms[i]);
    if (v < b.v_eps) {
      b.v_eps = v;
      b.beta = c.alpha2() / c.alpha1() * (c.l_f * c.l_f + std::pow(c.l_f, 4));
    }
    v_max = std::max(v_max, c.v_max);
    decay = std::max(decay, c.decay());
  }
  b.tau = update_steps(b.v_eps, v_max, decay);
  return b;
}

}  // namespace tvcov
