#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

std::vector<P> clip(const std::vector<P>& poly, const P& a, double b) {
  std::vector<P> out;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const P& cur = poly[k];
    const P& nxt = poly[(k + 1) % n];
    const double dc = a.dot(cur) - b;
    const double dn = a.dot(nxt) - b;
    if (dc <= 0) out.push_back(cur);
    if ((dc < 0 && dn > 0) || (dc > 0 && dn < 0)) {
      const double s = dc / (dc - dn);
      out.push_back(cur + s * (nxt - cur));
    }
  }
  return out;
}

std::vector<P> voronoi_cell(const std::vector<P>& gens, std::size_t i, const std::vector<P>& box) {
  std::vector<P> cell = box;
  for (std::size_t j = 0; j < gens.size(); ++j) {
    if (j == i) continue;
    const P a = gens[j] - gens[i];
    const double b = 0.5 * (gens[j].squaredNorm() - gens[i].squaredNorm());
    cell = clip(cell, a, b);
  }
  return cell;
}

double shoelace_area(const std::vector<P>& poly) {
  double s = 0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const P& p = poly[k];
    const P& q = poly[(k + 1) % poly.size()];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

P shoelace_centroid(const std::vector<P>& poly) {
  double a = 0;
  P c = P::Zero();
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const P& p = poly[k];
    const P& q = poly[(k + 1) % poly.size()];
    const double cr = p.x() * q.y() - q.x() * p.y();
    a += cr;
    c += cr * (p + q);
  }
  return c / (3.0 * a);
}

std::vector<P> lloyd(std::vector<P> gens, const std::vector<P>& box, int max_iters, double tol) {
  for (int it = 0; it < max_iters; ++it) {
    double move = 0;
    std::vector<P> next(gens.size());
    for (std::size_t i = 0; i < gens.size(); ++i) {
      next[i] = shoelace_centroid(voronoi_cell(gens, i, box));
      move = std::max(move, (next[i] - gens[i]).norm());
    }
    gens = next;
    if (move < tol) break;
  }
  return gens;
}

std::size_t nearest(const std::vector<P>& gens, const P& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < gens.size(); ++i) {
    if ((gens[i] - q).squaredNorm() < (gens[best] - q).squaredNorm()) best = i;
  }
  return best;
}

double grid_integral(double x0, double x1, double y0, double y1, int n,
                     const std::function<double(const P&)>& fn) {
  const double hx = (x1 - x0) / n, hy = (y1 - y0) / n;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s += fn(P(x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy));
  }
  return s * hx * hy;
}

double integrator_tracking_value(const Eigen::Vector2d& x0, const std::vector<Eigen::Vector2d>& xr,
                                 const std::vector<Eigen::Vector2d>& ur, double dt,
                                 const Eigen::Vector2d& q_diag, const Eigen::Vector2d& r_diag,
                                 std::vector<Eigen::Vector2d>* inputs) {
  // Unknowns u_0..u_{N-1}; x_k = x0 + dt * sum_{j<k} u_j. Each coordinate
  // separates, so solve two independent weighted least-squares problems.
  const int n = static_cast<int>(ur.size());
  Eigen::MatrixXd sol(n, 2);
  double value = 0;
  for (int d = 0; d < 2; ++d) {
    const int rows = 2 * n;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    const double sq = std::sqrt(q_diag(d)), sr = std::sqrt(r_diag(d));
    for (int k = 0; k < n; ++k) {
      // state residual at step k (k = 0 is fixed, contributes a constant)
      for (int j = 0; j < k; ++j) a(k, j) = sq * dt;
      b(k) = sq * (xr[k](d) - x0(d));
      a(n + k, k) = sr;
      b(n + k) = sr * ur[k](d);
    }
    const Eigen::VectorXd u = a.colPivHouseholderQr().solve(b);
    sol.col(d) = u;
    value += (a * u - b).squaredNorm();
  }
  if (inputs) {
    inputs->clear();
    for (int k = 0; k < n; ++k) inputs->push_back(sol.row(k).transpose());
  }
  return value;
}

}  // namespace oracle
