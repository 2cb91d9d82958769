#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tvcov/dynamics.hpp"
#include "tvcov/geometry.hpp"
#include "tvcov/nlp_solver.hpp"

namespace tvcov {

/// Weights, horizon and the certified decrease/ Lipschitz constants of one
/// agent's tracking controller.
struct TrackerConstants {
  Mat q;                    ///< state weight, positive definite
  Mat r;                    ///< input weight, positive definite
  double gamma_bar = 10.0;  ///< V(x, r) <= gamma_bar |x - x^r|_Q^2
  double alpha_n = 0.5;     ///< per-step decrease factor
  double v_max = 70.0;      ///< region-of-attraction level
  double l_v = 180.0;       ///< Lipschitz constant of V in the reference
  double l_f = 1.0;         ///< Lipschitz constant of the dynamics
  int horizon = 20;         ///< N
  long k_interval = 1;      ///< planner interval K
  int n0 = 0;               ///< additional horizon lower bound supplied by the user

  double alpha1() const;  ///< smallest eigenvalue of q
  double alpha2() const;  ///< largest eigenvalue of q
  double decay() const { return 1.0 - alpha_n / gamma_bar; }
  /// Throws DomainError on inconsistent values.
  void validate(int state_dim, int input_dim) const;
};

/// N+1 reference pairs r_0..r_N.
struct ReferenceSegment {
  std::vector<Vec> states;
  std::vector<Vec> inputs;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

/// Entries offset..offset+n of a reference, using extended indexing.
ReferenceSegment reference_segment(const Trajectory& plan, long offset, int n);

struct TrackerSolution {
  Trajectory trajectory;  ///< N inputs, N+1 states
  double value = 0.0;
  Vec first_input;
  NlpStatus status = NlpStatus::OptimalLocal;
  double max_violation = 0.0;
  bool kept_candidate = false;
};

struct TrackerOptions {
  double membership_tol = 1e-9;
  NlpOptions nlp = [] {
    NlpOptions o;
    o.feas_tol = 1e-10;
    return o;
  }();
};

double stage_cost(const Vec& x, const Vec& u, const Vec& xr, const Vec& ur,
                  const TrackerConstants& consts);

/// min sum_{k<N} |x_k - x^r_k|_Q^2 + |u_k - u^r_k|_R^2 subject to x_0 = x_now,
/// the dynamics, the full state and input boxes and C x_k in `eroded[k]`
/// for k < N. Throws TrackerInfeasible when no admissible trajectory is found.
TrackerSolution solve_tracking(const AgentModel& model, const Vec& x_now,
                               const ReferenceSegment& ref, std::span<const ConvexPolygon> eroded,
                               const TrackerConstants& consts,
                               const std::optional<Trajectory>& warm_start = {},
                               const TrackerOptions& opts = {});

/// x+ = f(x_now, u*_0).
Vec closed_loop_step(const AgentModel& model, const Vec& x_now, const TrackerSolution& sol);

/// Shifted tracker solution closed with two reference-input rollouts:
/// inputs [u*_1..u*_{N-2}, u^r_{N-1}, u^r_N],
/// states [x*_1..x*_{N-1}, f(x*_{N-1}, u^r_{N-1}), f(., u^r_N)].
/// `ref` is the segment the solution tracked.
Trajectory candidate_trajectory(const AgentModel& model, const TrackerSolution& prev,
                                const ReferenceSegment& ref);

/// True iff every candidate state lies in the state box and every candidate
/// position lies in the matching eroded cell, k = 0..N.
bool check_update_condition(const AgentModel& model, const Trajectory& candidate,
                            std::span<const ConvexPolygon> eroded, double tol = 0.0);

/// Unrounded horizon lower bound.
double n_star_raw(double weight_ratio, double l_f, double gamma_bar, double alpha_n);
/// Smallest admissible horizon, at least 1.
int n_star(double weight_ratio, double l_f, double gamma_bar, double alpha_n);
int n_star(const TrackerConstants& consts);

struct UpdateBounds {
  double v_eps = 0.0;  ///< tracking level below which a partition update is guaranteed
  long tau = 0;        ///< steps needed to get there from V_max
  double beta = 0.0;
};

/// alpha1 eps^2 / ((1 + beta) |C|^2), beta = (alpha2/alpha1)(L_f^2 + L_f^4).
double update_value_threshold(double alpha1, double alpha2, double l_f, double epsilon, double c_norm);
/// ceil((ln v_eps - ln v_max) / ln decay), clamped at 0.
long update_steps(double v_eps, double v_max, double decay);
/// Fleet bounds: smallest V_eps over agents, largest V_max and decay.
UpdateBounds finite_update_bounds(std::span<const TrackerConstants> consts, double epsilon,
                                  std::span<const double> c_norms);

/// Worst ratios seen while certifying tracking constants.
struct CertificationReport {
  double worst_gamma = 0.0;  ///< max V_0 / |x_0 - x^r_0|_Q^2
  double worst_decay = 0.0;  ///< max V_{t+1} / V_t
  double worst_lv = 0.0;     ///< max (V(x, r') - V(x, r)) / |r' - r|
  int trials = 0;
  int solves = 0;
};

/// Empirically certifies the user supplied gamma_bar, decay and L_V: tracks
/// random reachable references from random states with V <= V_max and checks
/// V_0 <= gamma_bar |x_0 - x^r_0|_Q^2, V_{t+1} <= decay V_t and the reference
/// Lipschitz bound. Zero values short-circuit the ratios. References keep
/// `reference_margin` inside the state and input boxes, matching the margin
/// the planner leaves. Throws CertificationFailed naming the worst witness.
TrackerConstants estimate_tracking_constants(const AgentModel& model, const TrackerConstants& partial,
                                             int trials, std::uint64_t seed = 0,
                                             CertificationReport* report = nullptr,
                                             int steps_per_trial = 8, double reference_margin = 1e-3);

}  // namespace tvcov
