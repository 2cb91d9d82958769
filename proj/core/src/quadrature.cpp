#include "quadrature.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "tvcov/density.hpp"
#include "tvcov/errors.hpp"

namespace tvcov::detail {
namespace {

// 12-point symmetric rule, exact for polynomials of degree 6 on a triangle.
// Barycentric coordinates and weights normalised to sum to one.
struct Node {
  double a, b, c, w;
};

constexpr double kA1 = 0.501426509658179, kB1 = 0.249286745170910;
constexpr double kA2 = 0.873821971016996, kB2 = 0.063089014491502;
constexpr double kA3 = 0.053145049844817, kB3 = 0.310352451033784, kC3 = 0.636502499121399;
constexpr double kW1 = 0.116786275726379, kW2 = 0.050844906370207, kW3 = 0.082851075618374;

constexpr std::array<Node, 12> kRule{{
    {kA1, kB1, kB1, kW1}, {kB1, kA1, kB1, kW1}, {kB1, kB1, kA1, kW1},
    {kA2, kB2, kB2, kW2}, {kB2, kA2, kB2, kW2}, {kB2, kB2, kA2, kW2},
    {kA3, kB3, kC3, kW3}, {kA3, kC3, kB3, kW3}, {kB3, kA3, kC3, kW3},
    {kB3, kC3, kA3, kW3}, {kC3, kA3, kB3, kW3}, {kC3, kB3, kA3, kW3},
}};

double tri_diameter(const Point& a, const Point& b, const Point& c) {
  return std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
}

void visit_triangle(const Point& a, const Point& b, const Point& c, double h, int depth,
                    const NodeVisitor& visit) {
  if (depth > 0 && tri_diameter(a, b, c) > h) {
    const Point ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    visit_triangle(a, ab, ca, h, depth - 1, visit);
    visit_triangle(ab, b, bc, h, depth - 1, visit);
    visit_triangle(ca, bc, c, h, depth - 1, visit);
    visit_triangle(ab, bc, ca, h, depth - 1, visit);
    return;
  }
  const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  if (area == 0.0) return;
  for (const Node& n : kRule) visit(n.a * a + n.b * b + n.c * c, n.w * area);
}

}  // namespace

void for_each_node(const ConvexPolygon& poly, double max_diameter, int max_depth,
                   const NodeVisitor& visit) {
  if (poly.is_empty()) fail(ErrorCode::EmptyPolygon, "quadrature over an empty polygon");
  const double h = max_diameter > 0.0 ? max_diameter : std::numeric_limits<double>::infinity();
  const auto& v = poly.vertices();
  const Point hub = poly.vertex_centroid();
  for (std::size_t k = 0; k < v.size(); ++k) {
    visit_triangle(hub, v[k], v[(k + 1) % v.size()], h, max_depth, visit);
  }
}

}  // namespace tvcov::detail

namespace tvcov {

double integrate_polygon(const ConvexPolygon& poly, const std::function<double(const Point&)>& fn,
                         double max_diameter, int max_depth) {
  double sum = 0.0;
  detail::for_each_node(poly, max_diameter, max_depth,
                        [&](const Point& q, double w) { sum += w * fn(q); });
  return sum;
}

}  // namespace tvcov
