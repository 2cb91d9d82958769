#pragma once

#include <functional>

#include "tvcov/geometry.hpp"

namespace tvcov::detail {

using NodeVisitor = std::function<void(const Point& q, double weight)>;

/// Visits every quadrature node of a convex polygon. The polygon is fanned
/// from its vertex centroid and each triangle is split into four until its
/// diameter is at most `max_diameter` (or `max_depth` levels are used).
void for_each_node(const ConvexPolygon& poly, double max_diameter, int max_depth,
                   const NodeVisitor& visit);

}  // namespace tvcov::detail
