#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace tvcov {

using Point = Eigen::Vector2d;

struct GeometryTolerance {
  double point = 1e-9;      ///< metres; membership and generator separation
  double area_rel = 1e-8;   ///< relative; tiling checks
  double vertex_merge = 1e-12;
};

/// Closed halfplane {q : normal . q <= offset} with unit normal.
struct Halfplane {
  Point normal = Point::UnitX();
  double offset = 0.0;

  double signed_distance(const Point& q) const { return normal.dot(q) - offset; }
  bool contains(const Point& q, double tol = 0.0) const { return signed_distance(q) <= tol; }
};

/// Convex polygon stored both as a counter-clockwise vertex loop and as the
/// list of edge halfplanes. Halfplane k supports the edge from vertex k to
/// vertex k+1. A polygon with no vertices is EMPTY.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  /// Builds from a vertex list in either orientation. Duplicate and collinear
  /// vertices are removed. Throws DomainError if the loop is not convex.
  static ConvexPolygon from_vertices(std::vector<Point> vertices);
  static ConvexPolygon box(double xmin, double xmax, double ymin, double ymax);
  static ConvexPolygon empty() { return {}; }

  bool is_empty() const { return vertices_.empty(); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Halfplane>& halfplanes() const { return halfplanes_; }
  std::size_t size() const { return vertices_.size(); }

  double area() const;
  Point area_centroid() const;
  Point vertex_centroid() const;
  double diameter() const;

  /// Intersection with a halfplane; may return EMPTY.
  ConvexPolygon clip(const Halfplane& h) const;

 private:
  static ConvexPolygon from_clean_ccw(std::vector<Point> vertices);

  std::vector<Point> vertices_;
  std::vector<Halfplane> halfplanes_;
};

/// Voronoi cells of `generators` restricted to `arena`. Cell i is the arena
/// clipped by the M-1 perpendicular bisector halfplanes of generator i.
std::vector<ConvexPolygon> voronoi_partition(std::span<const Point> generators,
                                             const ConvexPolygon& arena,
                                             const GeometryTolerance& tol = {});

/// Pontryagin difference of a convex polygon and a closed disk of `radius`.
/// Exact: every edge halfplane is moved inward by `radius`. Over-erosion
/// yields EMPTY rather than an error.
ConvexPolygon erode(const ConvexPolygon& poly, double radius);

/// True iff normal . q <= offset + tol for every halfplane. Throws
/// EmptyPolygon on an EMPTY polygon.
bool contains(const ConvexPolygon& poly, const Point& q, double tol = 0.0);

/// Smallest Euclidean distance between any two of the points.
double min_pairwise_distance(std::span<const Point> positions);

/// Distance from q to the polygon boundary, positive inside.
double boundary_clearance(const ConvexPolygon& poly, const Point& q);

/// JSON array of [x, y] pairs, counter-clockwise.
std::string polygon_to_json(const ConvexPolygon& poly);
ConvexPolygon polygon_from_json(const std::string& text);

/// Time-indexed partitions for a whole fleet. Index as [k][agent].
struct PartitionSequence {
  std::vector<std::vector<ConvexPolygon>> cells;
  std::vector<std::vector<ConvexPolygon>> eroded;    ///< cells eroded by R_max
  std::vector<std::vector<ConvexPolygon>> interior;  ///< eroded cells eroded by epsilon

  std::size_t horizon() const { return cells.size(); }
  std::size_t agents() const { return cells.empty() ? 0 : cells.front().size(); }
};

/// One agent's view of a PartitionSequence. Index as [k].
struct PartitionSlice {
  std::vector<ConvexPolygon> cells;
  std::vector<ConvexPolygon> eroded;
  std::vector<ConvexPolygon> interior;

  std::size_t horizon() const { return cells.size(); }
};

/// Builds W_{p[0]}, ..., W_{p[T-1]} together with the tightened cells.
/// `positions` is indexed [k][agent].
PartitionSequence build_partition_sequence(const std::vector<std::vector<Point>>& positions,
                                           const ConvexPolygon& arena, double r_max,
                                           double epsilon, const GeometryTolerance& tol = {});

/// The same single-time partition repeated `horizon` times.
PartitionSequence constant_partition_sequence(std::span<const Point> positions,
                                              const ConvexPolygon& arena, double r_max,
                                              double epsilon, std::size_t horizon,
                                              const GeometryTolerance& tol = {});

PartitionSlice slice_for_agent(const PartitionSequence& seq, std::size_t agent);

}  // namespace tvcov
