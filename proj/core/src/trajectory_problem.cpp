#include "trajectory_problem.hpp"

#include "tvcov/errors.hpp"

namespace tvcov::detail {

TrajectoryProblem::TrajectoryProblem(const AgentModel& model, int horizon)
    : model_(model), lay_{horizon, model.state_dim(), model.input_dim()} {
  if (horizon < 1) fail(ErrorCode::DomainError, "trajectory horizon must be at least 1");
}

void TrajectoryProblem::add_row(const std::vector<std::pair<int, double>>& coeffs, double rhs) {
  const int row = static_cast<int>(rhs_.size());
  for (const auto& [col, v] : coeffs) {
    if (v != 0.0) rows_.emplace_back(row, col, v);
  }
  rhs_.push_back(rhs);
}

void TrajectoryProblem::add_state_box(int k, const Box& box) {
  for (int j = 0; j < lay_.state_dim; ++j) {
    add_row({{lay_.state(k) + j, 1.0}}, box.upper(j));
    add_row({{lay_.state(k) + j, -1.0}}, -box.lower(j));
  }
}

void TrajectoryProblem::add_input_box(int k, const Box& box) {
  for (int j = 0; j < lay_.input_dim; ++j) {
    add_row({{lay_.input(k) + j, 1.0}}, box.upper(j));
    add_row({{lay_.input(k) + j, -1.0}}, -box.lower(j));
  }
}

void TrajectoryProblem::add_position_cell(int k, const ConvexPolygon& cell) {
  if (cell.is_empty()) fail(ErrorCode::EmptyPolygon, "position constraint on an empty cell");
  const Mat& c = model_.output_matrix();
  for (const Halfplane& h : cell.halfplanes()) {
    const Eigen::RowVectorXd a = h.normal.transpose() * c;
    std::vector<std::pair<int, double>> coeffs;
    for (int j = 0; j < lay_.state_dim; ++j) coeffs.emplace_back(lay_.state(k) + j, a(j));
    add_row(coeffs, h.offset);
  }
}

void TrajectoryProblem::set_trust_region(int pairs, const Vec& center, double radius) {
  const int width = lay_.state_dim + lay_.input_dim;
  if (center.size() != pairs * width) fail(ErrorCode::DimensionMismatch, "trust-region center size");
  if (pairs > lay_.horizon) fail(ErrorCode::DomainError, "trust region longer than the horizon");
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < pairs; ++k) {
    for (int j = 0; j < lay_.state_dim; ++j) trip.emplace_back(k * width + j, lay_.state(k) + j, 1.0);
    for (int j = 0; j < lay_.input_dim; ++j) {
      trip.emplace_back(k * width + lay_.state_dim + j, lay_.input(k) + j, 1.0);
    }
  }
  NlpProblem::TrustRegion tr;
  tr.selector.resize(pairs * width, lay_.num_vars());
  tr.selector.setFromTriplets(trip.begin(), trip.end());
  tr.center = center;
  tr.radius = radius;
  trust_ = std::move(tr);
}

NlpProblem TrajectoryProblem::build(decltype(NlpProblem::objective) objective,
                                    const Vec& initial_guess) const {
  NlpProblem p;
  p.num_vars = lay_.num_vars();
  p.objective = std::move(objective);
  p.objective_hessian = true;
  p.initial_guess = initial_guess;

  const int n = lay_.state_dim, m = lay_.input_dim, len = lay_.horizon;
  const int closure_rows = closure_ == Closure::None ? 0 : n;
  p.num_eq = len * n + closure_rows + static_cast<int>(fixed_states_.size()) * n +
             static_cast<int>(fixed_inputs_.size()) * m;

  const AgentModel* model = &model_;
  const VariableLayout lay = lay_;
  const Closure closure = closure_;
  const int num_eq = p.num_eq;
  const auto fixed_states = fixed_states_;
  const auto fixed_inputs = fixed_inputs_;
  p.equalities = [=](const Vec& z, Vec& c, SpMat* jac) {
    c.resize(num_eq);
    std::vector<Eigen::Triplet<double>> trip;
    Mat a, b;
    int row = 0;
    for (int k = 0; k < len; ++k) {
      const Vec x = z.segment(lay.state(k), n);
      const Vec u = z.segment(lay.input(k), m);
      c.segment(row, n) = z.segment(lay.state(k + 1), n) - model->step(x, u);
      if (jac) {
        model->jacobians(x, u, a, b);
        for (int i = 0; i < n; ++i) {
          trip.emplace_back(row + i, lay.state(k + 1) + i, 1.0);
          for (int j = 0; j < n; ++j) {
            if (a(i, j) != 0.0) trip.emplace_back(row + i, lay.state(k) + j, -a(i, j));
          }
          for (int j = 0; j < m; ++j) {
            if (b(i, j) != 0.0) trip.emplace_back(row + i, lay.input(k) + j, -b(i, j));
          }
        }
      }
      row += n;
    }
    if (closure != Closure::None) {
      // Periodic: x_0 = x_L. Steady terminal: x_L = x_{L-1}, which with the
      // last dynamics row gives f(x_{L-1}, u_{L-1}) = x_{L-1}.
      const int other = closure == Closure::Periodic ? 0 : len - 1;
      c.segment(row, n) = z.segment(lay.state(len), n) - z.segment(lay.state(other), n);
      if (jac) {
        for (int i = 0; i < n; ++i) {
          trip.emplace_back(row + i, lay.state(len) + i, 1.0);
          trip.emplace_back(row + i, lay.state(other) + i, -1.0);
        }
      }
      row += n;
    }
    for (const auto& [k, v] : fixed_states) {
      c.segment(row, n) = z.segment(lay.state(k), n) - v;
      if (jac) {
        for (int i = 0; i < n; ++i) trip.emplace_back(row + i, lay.state(k) + i, 1.0);
      }
      row += n;
    }
    for (const auto& [k, v] : fixed_inputs) {
      c.segment(row, m) = z.segment(lay.input(k), m) - v;
      if (jac) {
        for (int i = 0; i < m; ++i) trip.emplace_back(row + i, lay.input(k) + i, 1.0);
      }
      row += m;
    }
    if (jac) {
      jac->resize(num_eq, lay.num_vars());
      jac->setFromTriplets(trip.begin(), trip.end());
    }
  };

  // Only the dynamics rows are nonlinear: c = x_{k+1} - f(x_k, u_k).
  p.equality_hessian = [=](const Vec& z, const Vec& w, SpMat& hess) {
    std::vector<Eigen::Triplet<double>> trip;
    Mat h;
    for (int k = 0; k < len; ++k) {
      const Vec wk = w.segment(k * n, n);
      if (wk.isZero(0.0)) continue;
      model->weighted_hessian(z.segment(lay.state(k), n), z.segment(lay.input(k), m), wk, h);
      for (int i = 0; i < n + m; ++i) {
        const int ri = i < n ? lay.state(k) + i : lay.input(k) + i - n;
        for (int j = 0; j < n + m; ++j) {
          if (h(i, j) == 0.0) continue;
          const int cj = j < n ? lay.state(k) + j : lay.input(k) + j - n;
          trip.emplace_back(ri, cj, -h(i, j));
        }
      }
    }
    hess.resize(lay.num_vars(), lay.num_vars());
    hess.setFromTriplets(trip.begin(), trip.end());
  };

  p.ineq_matrix.resize(static_cast<Eigen::Index>(rhs_.size()), p.num_vars);
  p.ineq_matrix.setFromTriplets(rows_.begin(), rows_.end());
  p.ineq_rhs = Eigen::Map<const Vec>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
  p.trust_region = trust_;
  return p;
}

Vec TrajectoryProblem::pack(const Trajectory& traj) const {
  if (static_cast<int>(traj.length()) != lay_.horizon || traj.states.size() != traj.inputs.size() + 1) {
    fail(ErrorCode::ShapeMismatch, "trajectory does not match the problem horizon");
  }
  Vec z(lay_.num_vars());
  for (int k = 0; k <= lay_.horizon; ++k) z.segment(lay_.state(k), lay_.state_dim) = traj.states[k];
  for (int k = 0; k < lay_.horizon; ++k) z.segment(lay_.input(k), lay_.input_dim) = traj.inputs[k];
  return z;
}

Trajectory TrajectoryProblem::unpack(const Vec& z, TrajectoryTag tag) const {
  Trajectory traj;
  traj.tag = tag;
  for (int k = 0; k <= lay_.horizon; ++k) traj.states.push_back(z.segment(lay_.state(k), lay_.state_dim));
  for (int k = 0; k < lay_.horizon; ++k) traj.inputs.push_back(z.segment(lay_.input(k), lay_.input_dim));
  return traj;
}

}  // namespace tvcov::detail
