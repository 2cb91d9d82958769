#pragma once

// Independent reference implementations used to cross-check the library.
// They deliberately avoid the library's geometry and quadrature code.

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace oracle {

using P = Eigen::Vector2d;

/// Sutherland-Hodgman clip of a polygon against {q : a . q <= b}.
std::vector<P> clip(const std::vector<P>& poly, const P& a, double b);

/// Cell of generator i: box clipped by all bisectors, in the order given.
std::vector<P> voronoi_cell(const std::vector<P>& gens, std::size_t i, const std::vector<P>& box);

double shoelace_area(const std::vector<P>& poly);
P shoelace_centroid(const std::vector<P>& poly);

/// Plain Lloyd iteration with uniform density: move every generator to the
/// area centroid of its cell until the largest move is below `tol`.
std::vector<P> lloyd(std::vector<P> gens, const std::vector<P>& box, int max_iters, double tol);

std::size_t nearest(const std::vector<P>& gens, const P& q);

/// Midpoint-rule integral of fn over the axis-aligned box with n x n cells.
double grid_integral(double x0, double x1, double y0, double y1, int n,
                     const std::function<double(const P&)>& fn);

/// Finite-horizon tracking least squares for x+ = x + dt u with the dynamics
/// eliminated: min sum_{k<N} |x_k - xr_k|_Q^2 + |u_k - ur_k|_R^2 with x_0 fixed.
/// Q and R are diagonal (given by their diagonals). Returns the optimal value.
double integrator_tracking_value(const Eigen::Vector2d& x0, const std::vector<Eigen::Vector2d>& xr,
                                 const std::vector<Eigen::Vector2d>& ur, double dt,
                                 const Eigen::Vector2d& q_diag, const Eigen::Vector2d& r_diag,
                                 std::vector<Eigen::Vector2d>* inputs = nullptr);

}  // namespace oracle
