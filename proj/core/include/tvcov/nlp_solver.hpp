#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tvcov {

using SpMat = Eigen::SparseMatrix<double>;

/// Stacked trajectory variables z = [x_0, ..., x_L, u_0, ..., u_{L-1}].
struct VariableLayout {
  int horizon = 0;
  int state_dim = 0;
  int input_dim = 0;

  int num_vars() const { return (horizon + 1) * state_dim + horizon * input_dim; }
  int state(int k) const { return k * state_dim; }
  int input(int k) const { return (horizon + 1) * state_dim + k * input_dim; }
};

/// min f(z) s.t. c(z) = 0, A z <= b and optionally |S z - s| <= radius.
struct NlpProblem {
  int num_vars = 0;

  /// Returns f(z); fills `grad` (resized by the callee) and, when non-null,
  /// the objective Hessian.
  std::function<double(const Eigen::VectorXd& z, Eigen::VectorXd& grad, SpMat* hess)> objective;
  /// Whether `objective` fills the Hessian. Otherwise a BFGS model is kept.
  bool objective_hessian = false;

  int num_eq = 0;
  /// Fills c(z) (length num_eq) and, when non-null, its Jacobian.
  std::function<void(const Eigen::VectorXd& z, Eigen::VectorXd& c, SpMat* jac)> equalities;
  /// Optional sum_i w_i times the Hessian of c_i. When absent the solver uses
  /// a Gauss-Newton model for the equality terms.
  std::function<void(const Eigen::VectorXd& z, const Eigen::VectorXd& w, SpMat& hess)> equality_hessian;

  SpMat ineq_matrix;  ///< rows x num_vars
  Eigen::VectorXd ineq_rhs;

  struct TrustRegion {
    SpMat selector;  ///< rows x num_vars
    Eigen::VectorXd center;
    double radius = 0.0;
  };
  std::optional<TrustRegion> trust_region;

  Eigen::VectorXd initial_guess;
};

struct NlpOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-6;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_cap = 1e10;
  int max_outer = 60;
  int max_inner = 200;
  bool record_merit = false;
  /// CSV iteration log (outer, merit, violation); null disables it.
  std::ostream* log = nullptr;
};

enum class NlpStatus { OptimalLocal, MaxIter, Infeasible };

std::string_view to_string(NlpStatus status);

struct NlpSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  double max_violation = 0.0;
  double stationarity = 0.0;
  NlpStatus status = NlpStatus::MaxIter;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double penalty = 0.0;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd ineq_multipliers;  ///< affine rows, then the trust region if present
  /// Merit values of every accepted inner iterate, grouped by outer iteration.
  std::vector<std::vector<double>> merit_trace;
};

/// Augmented Lagrangian outer loop with a line-search Newton-type inner solver.
NlpSolution solve(const NlpProblem& problem, const NlpOptions& opts = {});

/// Constraint violation of z: max of |c|, positive parts of A z - b and of the
/// trust-region excess.
double max_violation(const NlpProblem& problem, const Eigen::VectorXd& z);

struct GradientCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::vector<std::string> failures;
};

/// Central finite-difference check of the objective gradient and the equality
/// Jacobian at `points` perturbations of the initial guess.
GradientCheckReport check_gradients(const NlpProblem& problem, int points = 5, double tol = 1e-5,
                                    std::uint64_t seed = 0, double spread = 0.1);

}  // namespace tvcov
