#include "tvcov/nlp_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tvcov/errors.hpp"

namespace tvcov {

using Eigen::VectorXd;

std::string_view to_string(NlpStatus status) {
  switch (status) {
    case NlpStatus::OptimalLocal: return "OPTIMAL_LOCAL";
    case NlpStatus::MaxIter: return "MAX_ITER";
    case NlpStatus::Infeasible: return "INFEASIBLE";
  }
  return "MAX_ITER";
}

namespace {

constexpr double kRadiusFloor = 1e-8;

struct Residuals {
  double f = 0.0;
  VectorXd c;
  VectorXd g;  // affine rows then the trust region
};

class Merit {
 public:
  Merit(const NlpProblem& p) : p_(p) {
    n_aff_ = static_cast<int>(p_.ineq_rhs.size());
    n_ineq_ = n_aff_ + (p_.trust_region ? 1 : 0);
    lam_ = VectorXd::Zero(p_.num_eq);
    mu_ = VectorXd::Zero(n_ineq_);
    if (p_.trust_region) {
      const auto& tr = *p_.trust_region;
      scale_ = std::max(tr.radius, kRadiusFloor);
    }
  }

  int num_ineq() const { return n_ineq_; }
  VectorXd& lam() { return lam_; }
  VectorXd& mu() { return mu_; }
  double rho = 10.0;

  Residuals residuals(const VectorXd& z, VectorXd* fgrad = nullptr, SpMat* fhess = nullptr,
                      SpMat* jac = nullptr, VectorXd* tr_w = nullptr) const {
    Residuals r;
    VectorXd grad;
    r.f = p_.objective(z, grad, fhess);
    if (fgrad) *fgrad = std::move(grad);
    r.c.resize(p_.num_eq);
    if (p_.num_eq > 0) p_.equalities(z, r.c, jac);
    r.g.resize(n_ineq_);
    if (n_aff_ > 0) r.g.head(n_aff_) = p_.ineq_matrix * z - p_.ineq_rhs;
    if (p_.trust_region) {
      const auto& tr = *p_.trust_region;
      VectorXd w = tr.selector * z - tr.center;
      r.g(n_aff_) = (w.squaredNorm() - tr.radius * tr.radius) / (2.0 * scale_);
      if (tr_w) *tr_w = std::move(w);
    }
    return r;
  }

  double value(const Residuals& r) const {
    double phi = r.f + lam_.dot(r.c) + 0.5 * rho * r.c.squaredNorm();
    for (int j = 0; j < n_ineq_; ++j) {
      const double s = std::max(0.0, mu_(j) + rho * r.g(j));
      phi += (s * s - mu_(j) * mu_(j)) / (2.0 * rho);
    }
    return phi;
  }

  double value(const VectorXd& z) const { return value(residuals(z)); }

  /// Merit value, gradient and Newton-type model Hessian. `bfgs` replaces the
  /// objective Hessian when non-null.
  double full(const VectorXd& z, VectorXd& grad, SpMat& hess, VectorXd& fgrad,
              const Eigen::MatrixXd* bfgs) const {
    const int n = p_.num_vars;
    SpMat fhess(n, n), jac(p_.num_eq, n);
    VectorXd w;
    const Residuals r = residuals(z, &fgrad, p_.objective_hessian ? &fhess : nullptr,
                                  p_.num_eq > 0 ? &jac : nullptr, &w);
    grad = fgrad;
    if (bfgs) {
      hess = bfgs->sparseView();
    } else {
      hess = fhess;
      if (hess.rows() != n) hess.resize(n, n);
    }
    if (p_.num_eq > 0) {
      const VectorXd weights = lam_ + rho * r.c;
      grad += jac.transpose() * weights;
      hess += rho * SpMat(jac.transpose() * jac);
      if (p_.equality_hessian) {
        SpMat ch(n, n);
        p_.equality_hessian(z, weights, ch);
        hess += ch;
      }
    }
    if (n_aff_ > 0) {
      VectorXd s(n_aff_), mask(n_aff_);
      for (int j = 0; j < n_aff_; ++j) {
        s(j) = std::max(0.0, mu_(j) + rho * r.g(j));
        mask(j) = s(j) > 0.0 ? rho : 0.0;
      }
      grad += p_.ineq_matrix.transpose() * s;
      hess += SpMat(p_.ineq_matrix.transpose() * mask.asDiagonal() * p_.ineq_matrix);
    }
    if (p_.trust_region) {
      const auto& tr = *p_.trust_region;
      const double s = std::max(0.0, mu_(n_aff_) + rho * r.g(n_aff_));
      if (s > 0.0) {
        const VectorXd v = (tr.selector.transpose() * w) / scale_;
        grad += s * v;
        const SpMat vs = v.sparseView();
        hess += rho * SpMat(vs * vs.transpose());
        hess += (s / scale_) * SpMat(tr.selector.transpose() * tr.selector);
      }
    }
    return value(r);
  }

  double violation(const Residuals& r) const {
    double v = r.c.size() ? r.c.lpNorm<Eigen::Infinity>() : 0.0;
    for (int j = 0; j < n_ineq_; ++j) v = std::max(v, r.g(j));
    return v;
  }

  double complementarity(const Residuals& r) const {
    double v = 0.0;
    for (int j = 0; j < n_ineq_; ++j) {
      if (mu_(j) > 0.0 && r.g(j) < 0.0) v = std::max(v, std::min(mu_(j), -r.g(j)));
    }
    return v;
  }

 private:
  const NlpProblem& p_;
  int n_aff_ = 0;
  int n_ineq_ = 0;
  double scale_ = 1.0;
  VectorXd lam_;
  VectorXd mu_;
};

bool newton_direction(const SpMat& hess, const VectorXd& grad, VectorXd& dir) {
  const int n = static_cast<int>(grad.size());
  double diag_max = 0.0;
  for (int j = 0; j < n; ++j) diag_max = std::max(diag_max, std::abs(hess.coeff(j, j)));
  SpMat eye(n, n);
  eye.setIdentity();
  Eigen::SimplicialLDLT<SpMat> ldlt;
  double delta = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    ldlt.compute(delta > 0.0 ? SpMat(hess + delta * eye) : hess);
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) {
      dir = ldlt.solve(-grad);
      if (dir.allFinite() && grad.dot(dir) < 0.0) return true;
    }
    delta = delta == 0.0 ? 1e-10 * (1.0 + diag_max) : delta * 100.0;
  }
  return false;
}

struct InnerResult {
  double stationarity = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

InnerResult minimize_inner(const NlpProblem& p, Merit& merit, VectorXd& z, const NlpOptions& opts,
                           std::vector<double>* trace) {
  const int n = p.num_vars;
  const double tol = 0.1 * opts.opt_tol;
  std::optional<Eigen::MatrixXd> bfgs;
  if (!p.objective_hessian) bfgs = Eigen::MatrixXd::Identity(n, n);

  InnerResult out;
  VectorXd grad, fgrad, dir;
  SpMat hess;
  for (int it = 0; it < opts.max_inner; ++it) {
    const double phi = merit.full(z, grad, hess, fgrad, bfgs ? &*bfgs : nullptr);
    out.stationarity = grad.lpNorm<Eigen::Infinity>();
    if (trace) trace->push_back(phi);
    if (out.stationarity <= tol) break;
    if (!newton_direction(hess, grad, dir)) dir = -grad;

    const double slope = grad.dot(dir);
    double step = 1.0;
    bool accepted = false;
    VectorXd trial;
    for (int ls = 0; ls < 60; ++ls) {
      trial = z + step * dir;
      const double phi_trial = merit.value(trial);
      if (std::isfinite(phi_trial) && phi_trial <= phi + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++out.iterations;
    if (bfgs) {
      VectorXd g_new;
      p.objective(trial, g_new, nullptr);
      const VectorXd s = trial - z;
      const VectorXd y = g_new - fgrad;
      const VectorXd bs = *bfgs * s;
      const double sbs = s.dot(bs);
      const double sy = s.dot(y);
      // Powell damping keeps the model positive definite.
      const double theta = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
      const VectorXd r = theta * y + (1.0 - theta) * bs;
      if (sbs > 0.0 && s.dot(r) > 0.0) {
        *bfgs += r * r.transpose() / s.dot(r) - bs * bs.transpose() / sbs;
      }
    }
    const bool tiny = (trial - z).lpNorm<Eigen::Infinity>() <=
                      1e-15 * (1.0 + z.lpNorm<Eigen::Infinity>());
    z = std::move(trial);
    if (tiny) break;
  }
  return out;
}

}  // namespace

double max_violation(const NlpProblem& problem, const VectorXd& z) {
  Merit m(problem);
  return m.violation(m.residuals(z));
}

NlpSolution solve(const NlpProblem& problem, const NlpOptions& opts) {
  if (problem.num_vars <= 0 || problem.initial_guess.size() != problem.num_vars) {
    fail(ErrorCode::DimensionMismatch, "initial guess does not match the variable count");
  }
  if (!problem.objective) fail(ErrorCode::DomainError, "problem has no objective");
  if (problem.num_eq > 0 && !problem.equalities) {
    fail(ErrorCode::DomainError, "problem declares equalities without a callback");
  }
  if (problem.ineq_rhs.size() > 0 && (problem.ineq_matrix.rows() != problem.ineq_rhs.size() ||
                                      problem.ineq_matrix.cols() != problem.num_vars)) {
    fail(ErrorCode::DimensionMismatch, "inequality matrix shape mismatch");
  }

  Merit merit(problem);
  merit.rho = opts.penalty_init;
  VectorXd z = problem.initial_guess;

  NlpSolution best;
  bool have_best = false;
  auto consider = [&](const VectorXd& zc, const Residuals& r, double viol, double stat) {
    const bool feasible = viol <= opts.feas_tol;
    bool better = !have_best;
    if (have_best) {
      const bool best_feasible = best.max_violation <= opts.feas_tol;
      if (feasible && best_feasible) better = r.f <= best.objective;
      else if (feasible != best_feasible) better = feasible;
      else better = viol < best.max_violation;
    }
    if (better) {
      best.z = zc;
      best.objective = r.f;
      best.max_violation = viol;
      best.stationarity = stat;
      have_best = true;
    }
  };

  NlpSolution sol;
  sol.status = NlpStatus::MaxIter;
  double prev_viol = merit.violation(merit.residuals(z));
  if (opts.log) *opts.log << "outer,merit,violation\n";

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    std::vector<double> trace;
    const InnerResult inner =
        minimize_inner(problem, merit, z, opts, opts.record_merit ? &trace : nullptr);
    sol.inner_iterations += inner.iterations;
    sol.outer_iterations = outer;
    if (opts.record_merit) sol.merit_trace.push_back(std::move(trace));

    const Residuals r = merit.residuals(z);
    const double viol = merit.violation(r);
    if (opts.log) *opts.log << outer << ',' << merit.value(r) << ',' << viol << '\n';

    merit.lam() += merit.rho * r.c;
    for (int j = 0; j < merit.num_ineq(); ++j) {
      merit.mu()(j) = std::max(0.0, merit.mu()(j) + merit.rho * r.g(j));
    }
    consider(z, r, viol, inner.stationarity);

    if (viol <= opts.feas_tol && inner.stationarity <= opts.opt_tol &&
        merit.complementarity(r) <= opts.opt_tol) {
      sol.status = NlpStatus::OptimalLocal;
      sol.z = z;
      sol.objective = r.f;
      sol.max_violation = viol;
      sol.stationarity = inner.stationarity;
      break;
    }
    if (viol > opts.feas_tol && viol > 0.25 * prev_viol) merit.rho *= opts.penalty_growth;
    if (merit.rho > opts.penalty_cap) {
      sol.status = viol > opts.feas_tol ? NlpStatus::Infeasible : NlpStatus::MaxIter;
      break;
    }
    prev_viol = viol;
  }

  if (sol.status != NlpStatus::OptimalLocal) {
    sol.z = best.z;
    sol.objective = best.objective;
    sol.max_violation = best.max_violation;
    sol.stationarity = best.stationarity;
    if (sol.status == NlpStatus::MaxIter && best.max_violation > opts.feas_tol &&
        merit.rho > opts.penalty_cap) {
      sol.status = NlpStatus::Infeasible;
    }
  }
  sol.penalty = merit.rho;
  sol.eq_multipliers = merit.lam();
  sol.ineq_multipliers = merit.mu();
  return sol;
}

GradientCheckReport check_gradients(const NlpProblem& problem, int points, double tol,
                                    std::uint64_t seed, double spread) {
  if (problem.initial_guess.size() != problem.num_vars) {
    fail(ErrorCode::DimensionMismatch, "initial guess does not match the variable count");
  }
  GradientCheckReport report;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  const int n = problem.num_vars;

  auto record = [&](double analytic, double numeric, const std::string& what) {
    const double err = std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
    report.max_rel_error = std::max(report.max_rel_error, err);
    if (err > tol) {
      report.passed = false;
      std::ostringstream os;
      os << what << ": analytic " << analytic << " vs finite difference " << numeric;
      report.failures.push_back(os.str());
    }
  };

  for (int pt = 0; pt < points; ++pt) {
    VectorXd z = problem.initial_guess;
    for (int j = 0; j < n; ++j) z(j) += normal(rng);

    VectorXd grad, scratch;
    problem.objective(z, grad, nullptr);
    Eigen::MatrixXd jac;
    if (problem.num_eq > 0) {
      VectorXd c(problem.num_eq);
      SpMat sj(problem.num_eq, n);
      problem.equalities(z, c, &sj);
      jac = Eigen::MatrixXd(sj);
    }
    for (int j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(z(j)));
      VectorXd zp = z, zm = z;
      zp(j) += h;
      zm(j) -= h;
      const double fd = (problem.objective(zp, scratch, nullptr) -
                         problem.objective(zm, scratch, nullptr)) / (2.0 * h);
      record(grad(j), fd, "objective gradient [" + std::to_string(j) + "]");
      if (problem.num_eq > 0) {
        VectorXd cp(problem.num_eq), cm(problem.num_eq);
        problem.equalities(zp, cp, nullptr);
        problem.equalities(zm, cm, nullptr);
        const VectorXd col = (cp - cm) / (2.0 * h);
        for (int i = 0; i < problem.num_eq; ++i) {
          record(jac(i, j), col(i),
                 "equality Jacobian [" + std::to_string(i) + "," + std::to_string(j) + "]");
        }
      }
    }
  }
  return report;
}

}  // namespace tvcov
