#include "tvcov/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "tvcov/errors.hpp"

namespace tvcov {
namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Point>& v) {
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    acc += cross(v[k], v[(k + 1) % v.size()]);
  }
  return 0.5 * acc;
}

// Drops repeated vertices and vertices sitting on the segment between their
// neighbours. Input must already be counter-clockwise.
std::vector<Point> simplify_loop(std::vector<Point> v, double merge_tol) {
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    std::vector<Point> out;
    out.reserve(v.size());
    for (const auto& p : v) {
      if (out.empty() || (p - out.back()).norm() > merge_tol) out.push_back(p);
    }
    while (out.size() > 1 && (out.front() - out.back()).norm() <= merge_tol) out.pop_back();
    if (out.size() != v.size()) changed = true;
    v = std::move(out);
    if (v.size() < 3) break;

    std::vector<Point> kept;
    kept.reserve(v.size());
    const std::size_t n = v.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point& prev = v[(k + n - 1) % n];
      const Point& cur = v[k];
      const Point& next = v[(k + 1) % n];
      const Point e1 = cur - prev;
      const Point e2 = next - cur;
      const double c = cross(e1, e2);
      if (c <= 1e-13 * e1.norm() * e2.norm()) {
        changed = true;
        continue;
      }
      kept.push_back(cur);
    }
    v = std::move(kept);
  }
  if (v.size() < 3) v.clear();
  return v;
}

}  // namespace

ConvexPolygon ConvexPolygon::from_clean_ccw(std::vector<Point> vertices) {
  ConvexPolygon poly;
  vertices = simplify_loop(std::move(vertices), GeometryTolerance{}.vertex_merge);
  if (vertices.size() < 3 || signed_area(vertices) <= 1e-20) return poly;
  poly.vertices_ = std::move(vertices);
  const std::size_t n = poly.vertices_.size();
  poly.halfplanes_.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Point& a = poly.vertices_[k];
    const Point& b = poly.vertices_[(k + 1) % n];
    const Point d = b - a;
    Halfplane h;
    h.normal = Point(d.y(), -d.x()).normalized();
    h.offset = h.normal.dot(a);
    poly.halfplanes_.push_back(h);
  }
  return poly;
}

ConvexPolygon ConvexPolygon::from_vertices(std::vector<Point> vertices) {
  if (vertices.size() < 3) return {};
  if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
  const std::size_t n = vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point e1 = vertices[k] - vertices[(k + n - 1) % n];
    const Point e2 = vertices[(k + 1) % n] - vertices[k];
    if (cross(e1, e2) < -1e-12 * std::max(1.0, e1.norm() * e2.norm())) {
      fail(ErrorCode::DomainError, "vertex loop is not convex");
    }
  }
  return from_clean_ccw(std::move(vertices));
}

ConvexPolygon ConvexPolygon::box(double xmin, double xmax, double ymin, double ymax) {
  if (!(xmax > xmin && ymax > ymin)) fail(ErrorCode::DomainError, "degenerate box");
  return from_clean_ccw({Point(xmin, ymin), Point(xmax, ymin), Point(xmax, ymax), Point(xmin, ymax)});
}

double ConvexPolygon::area() const { return is_empty() ? 0.0 : signed_area(vertices_); }

Point ConvexPolygon::area_centroid() const {
  if (is_empty()) fail(ErrorCode::EmptyPolygon, "centroid of empty polygon");
  // Shift to the first vertex to keep the shoelace sums well conditioned.
  const Point origin = vertices_.front();
  double a2 = 0.0;
  Point acc = Point::Zero();
  const std::size_t n = vertices_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point p = vertices_[k] - origin;
    const Point q = vertices_[(k + 1) % n] - origin;
    const double c = cross(p, q);
    a2 += c;
    acc += (p + q) * c;
  }
  return origin + acc / (3.0 * a2);
}

Point ConvexPolygon::vertex_centroid() const {
  if (is_empty()) fail(ErrorCode::EmptyPolygon, "vertex centroid of empty polygon");
  Point acc = Point::Zero();
  for (const auto& v : vertices_) acc += v;
  return acc / static_cast<double>(vertices_.size());
}

double ConvexPolygon::diameter() const {
  double d = 0.0;
  for (std::size_t a = 0; a < vertices_.size(); ++a) {
    for (std::size_t b = a + 1; b < vertices_.size(); ++b) {
      d = std::max(d, (vertices_[a] - vertices_[b]).norm());
    }
  }
  return d;
}

ConvexPolygon ConvexPolygon::clip(const Halfplane& h) const {
  if (is_empty()) return {};
  const std::size_t n = vertices_.size();
  std::vector<double> dist(n);
  bool all_in = true;
  bool all_out = true;
  for (std::size_t k = 0; k < n; ++k) {
    dist[k] = h.signed_distance(vertices_[k]);
    all_in = all_in && dist[k] <= 0.0;
    all_out = all_out && dist[k] >= 0.0;
  }
  if (all_in) return *this;
  if (all_out) return {};

  std::vector<Point> out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = (k + 1) % n;
    const Point& a = vertices_[k];
    const Point& b = vertices_[j];
    const double da = dist[k];
    const double db = dist[j];
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double t = da / (da - db);
      out.push_back(a + t * (b - a));
    }
  }
  return from_clean_ccw(std::move(out));
}

std::vector<ConvexPolygon> voronoi_partition(std::span<const Point> generators,
                                             const ConvexPolygon& arena,
                                             const GeometryTolerance& tol) {
  if (arena.is_empty()) fail(ErrorCode::EmptyPolygon, "arena is empty");
  const std::size_t m = generators.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (!contains(arena, generators[i], tol.point)) {
      std::ostringstream os;
      os << "generator " << i << " at (" << generators[i].x() << ", " << generators[i].y()
         << ") is outside the arena";
      fail(ErrorCode::OutsideArena, os.str());
    }
    for (std::size_t j = i + 1; j < m; ++j) {
      if ((generators[i] - generators[j]).norm() <= tol.point) {
        std::ostringstream os;
        os << "generators " << i << " and " << j << " coincide";
        fail(ErrorCode::CoincidentGenerators, os.str());
      }
    }
  }

  std::vector<ConvexPolygon> cells;
  cells.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    ConvexPolygon cell = arena;
    for (std::size_t j = 0; j < m && !cell.is_empty(); ++j) {
      if (j == i) continue;
      const Point d = generators[j] - generators[i];
      Halfplane h;
      h.normal = d.normalized();
      h.offset = h.normal.dot(0.5 * (generators[i] + generators[j]));
      cell = cell.clip(h);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

ConvexPolygon erode(const ConvexPolygon& poly, double radius) {
  if (radius < 0.0) fail(ErrorCode::DomainError, "erosion radius must be nonnegative");
  if (poly.is_empty() || radius == 0.0) return poly;
  ConvexPolygon out = poly;
  for (const auto& h : poly.halfplanes()) {
    Halfplane shifted = h;
    shifted.offset -= radius;
    out = out.clip(shifted);
    if (out.is_empty()) break;
  }
  return out;
}

bool contains(const ConvexPolygon& poly, const Point& q, double tol) {
  if (poly.is_empty()) fail(ErrorCode::EmptyPolygon, "membership test on empty polygon");
  for (const auto& h : poly.halfplanes()) {
    if (!h.contains(q, tol)) return false;
  }
  return true;
}

double min_pairwise_distance(std::span<const Point> positions) {
  if (positions.size() < 2) fail(ErrorCode::TooFewAgents, "need at least two positions");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      best = std::min(best, (positions[i] - positions[j]).norm());
    }
  }
  return best;
}

double boundary_clearance(const ConvexPolygon& poly, const Point& q) {
  if (poly.is_empty()) fail(ErrorCode::EmptyPolygon, "clearance to empty polygon");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : poly.halfplanes()) best = std::min(best, -h.signed_distance(q));
  return best;
}

std::string polygon_to_json(const ConvexPolygon& poly) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : poly.vertices()) arr.push_back({v.x(), v.y()});
  return arr.dump();
}

ConvexPolygon polygon_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::DomainError, std::string("polygon json: ") + e.what());
  }
  if (!arr.is_array()) fail(ErrorCode::DomainError, "polygon json must be an array");
  std::vector<Point> pts;
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2) {
      fail(ErrorCode::DomainError, "polygon vertex must be [x, y]");
    }
    pts.emplace_back(item[0].get<double>(), item[1].get<double>());
  }
  return ConvexPolygon::from_vertices(std::move(pts));
}

PartitionSequence build_partition_sequence(const std::vector<std::vector<Point>>& positions,
                                           const ConvexPolygon& arena, double r_max,
                                           double epsilon, const GeometryTolerance& tol) {
  PartitionSequence seq;
  seq.cells.reserve(positions.size());
  for (const auto& at_k : positions) {
    auto cells = voronoi_partition(at_k, arena, tol);
    std::vector<ConvexPolygon> eroded;
    std::vector<ConvexPolygon> interior;
    eroded.reserve(cells.size());
    interior.reserve(cells.size());
    for (const auto& c : cells) {
      eroded.push_back(erode(c, r_max));
      interior.push_back(erode(eroded.back(), epsilon));
    }
    seq.cells.push_back(std::move(cells));
    seq.eroded.push_back(std::move(eroded));
    seq.interior.push_back(std::move(interior));
  }
  return seq;
}

PartitionSequence constant_partition_sequence(std::span<const Point> positions,
                                              const ConvexPolygon& arena, double r_max,
                                              double epsilon, std::size_t horizon,
                                              const GeometryTolerance& tol) {
  const std::vector<Point> p(positions.begin(), positions.end());
  auto one = build_partition_sequence({p}, arena, r_max, epsilon, tol);
  PartitionSequence seq;
  seq.cells.assign(horizon, one.cells.front());
  seq.eroded.assign(horizon, one.eroded.front());
  seq.interior.assign(horizon, one.interior.front());
  return seq;
}

PartitionSlice slice_for_agent(const PartitionSequence& seq, std::size_t agent) {
  if (agent >= seq.agents()) fail(ErrorCode::ShapeMismatch, "agent index out of range");
  PartitionSlice s;
  s.cells.reserve(seq.horizon());
  s.eroded.reserve(seq.horizon());
  s.interior.reserve(seq.horizon());
  for (std::size_t k = 0; k < seq.horizon(); ++k) {
    s.cells.push_back(seq.cells[k][agent]);
    s.eroded.push_back(seq.eroded[k][agent]);
    s.interior.push_back(seq.interior[k][agent]);
  }
  return s;
}

}  // namespace tvcov
