#include "tvcov/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "quadrature.hpp"
#include "tvcov/errors.hpp"

namespace tvcov {
namespace {

long wrap(long t, long period) {
  const long r = t % period;
  return r < 0 ? r + period : r;
}

double gaussian(const Point& q, const Point& mean, double sigma) {
  return std::exp(-(q - mean).squaredNorm() / (2.0 * sigma * sigma));
}

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::DomainError, "sigma must be positive");
}

struct Accumulated {
  Moments moments;
  double direct_cost = 0.0;
};

Accumulated accumulate(const DensityField& field, const ConvexPolygon& poly, long t,
                       const QuadratureOptions& opts, const Point* cost_point) {
  Accumulated acc;
  const Point origin = poly.vertex_centroid();
  acc.moments.origin = origin;
  detail::for_each_node(poly, field.resolution(), opts.max_depth, [&](const Point& q, double w) {
    const double wphi = w * field.eval(q, t);
    const Point dq = q - origin;
    acc.moments.mass += wphi;
    acc.moments.first += wphi * dq;
    acc.moments.second += wphi * dq.squaredNorm();
    if (cost_point) acc.direct_cost += wphi * (q - *cost_point).squaredNorm();
  });
  return acc;
}

MassCentroid to_mass_centroid(const Moments& m, const ConvexPolygon& poly, double floor) {
  if (m.mass < floor) return {0.0, poly.area_centroid()};
  return {m.mass, m.origin + m.first / m.mass};
}

}  // namespace

DensityField DensityField::uniform(double value) {
  if (!(value >= 0.0)) fail(ErrorCode::DomainError, "uniform density must be nonnegative");
  DensityField f;
  f.kind_ = DensityKind::Uniform;
  f.value_ = value;
  f.resolution_ = std::numeric_limits<double>::infinity();
  return f;
}

DensityField DensityField::gaussian_circle(double sigma, const Point& center, double radius,
                                           long period_steps, double phase) {
  require_sigma(sigma);
  if (period_steps <= 0) fail(ErrorCode::DomainError, "circle period must be positive");
  if (!(radius >= 0.0)) fail(ErrorCode::DomainError, "circle radius must be nonnegative");
  DensityField f;
  f.kind_ = DensityKind::GaussianCircular;
  f.sigma_ = sigma;
  f.center_ = center;
  f.radius_ = radius;
  f.phase_ = phase;
  f.period_ = period_steps;
  f.resolution_ = 0.5 * sigma;
  return f;
}

DensityField DensityField::gaussian_waypoints(double sigma, std::vector<Waypoint> waypoints) {
  require_sigma(sigma);
  if (waypoints.empty()) fail(ErrorCode::DomainError, "waypoint path needs at least one waypoint");
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    if (waypoints[k].t < waypoints[k - 1].t) {
      fail(ErrorCode::DomainError, "waypoint times must be nondecreasing");
    }
  }
  DensityField f;
  f.kind_ = DensityKind::GaussianWaypointPath;
  f.sigma_ = sigma;
  f.waypoints_ = std::move(waypoints);
  f.resolution_ = 0.5 * sigma;
  return f;
}

DensityField DensityField::gaussian_static(double sigma, const Point& mean) {
  return gaussian_waypoints(sigma, {Waypoint{0.0, mean}});
}

DensityField DensityField::custom(Callable fn, double resolution, std::optional<long> period) {
  if (!fn) fail(ErrorCode::DomainError, "custom density needs a callable");
  if (!(resolution > 0.0)) fail(ErrorCode::DomainError, "custom density resolution must be positive");
  if (period && *period <= 0) fail(ErrorCode::DomainError, "period must be positive");
  DensityField f;
  f.kind_ = DensityKind::Custom;
  f.custom_ = std::move(fn);
  f.resolution_ = resolution;
  f.period_ = period;
  return f;
}

DensityField DensityField::with_resolution(double h) const {
  if (!(h > 0.0)) fail(ErrorCode::DomainError, "resolution must be positive");
  DensityField f = *this;
  f.resolution_ = h;
  return f;
}

Point DensityField::mean(long t) const {
  switch (kind_) {
    case DensityKind::GaussianCircular: {
      const double angle =
          phase_ + 2.0 * std::numbers::pi * static_cast<double>(wrap(t, *period_)) /
                       static_cast<double>(*period_);
      return center_ + radius_ * Point(std::cos(angle), std::sin(angle));
    }
    case DensityKind::GaussianWaypointPath: {
      const double tt = static_cast<double>(t);
      if (tt <= waypoints_.front().t) return waypoints_.front().mean;
      if (tt >= waypoints_.back().t) return waypoints_.back().mean;
      auto hi = std::upper_bound(waypoints_.begin(), waypoints_.end(), tt,
                                 [](double v, const Waypoint& w) { return v < w.t; });
      auto lo = hi - 1;
      const double span = hi->t - lo->t;
      const double s = span > 0.0 ? (tt - lo->t) / span : 1.0;
      return (1.0 - s) * lo->mean + s * hi->mean;
    }
    case DensityKind::Uniform:
    case DensityKind::Custom:
      break;
  }
  return Point::Zero();
}

double DensityField::eval(const Point& q, long t) const {
  switch (kind_) {
    case DensityKind::Uniform:
      return value_;
    case DensityKind::GaussianCircular:
    case DensityKind::GaussianWaypointPath:
      return gaussian(q, mean(t), sigma_);
    case DensityKind::Custom:
      return custom_(q, period_ ? wrap(t, *period_) : t);
  }
  return 0.0;
}

double Moments::cost_about(const Point& p) const {
  const Point d = p - origin;
  return second - 2.0 * d.dot(first) + mass * d.squaredNorm();
}

Moments density_moments(const DensityField& field, const ConvexPolygon& poly, long t,
                        const QuadratureOptions& opts) {
  return accumulate(field, poly, t, opts, nullptr).moments;
}

MassCentroid mass_centroid(const DensityField& field, const ConvexPolygon& poly, long t,
                           const QuadratureOptions& opts) {
  return to_mass_centroid(density_moments(field, poly, t, opts), poly, opts.mass_floor);
}

double locational_cost(const DensityField& field, std::span<const Point> positions,
                       std::span<const ConvexPolygon> partition, long t,
                       const QuadratureOptions& opts) {
  if (positions.size() != partition.size()) {
    fail(ErrorCode::ShapeMismatch, "positions and partition differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    total += accumulate(field, partition[i], t, opts, &positions[i]).direct_cost;
  }
  return total;
}

HorizonCost horizon_cost(const DensityField& field, std::span<const Point> positions,
                         std::span<const ConvexPolygon> cells, long t0,
                         const QuadratureOptions& opts) {
  if (positions.size() != cells.size()) {
    fail(ErrorCode::ShapeMismatch, "position and cell sequences differ in length");
  }
  HorizonCost out;
  out.per_step.reserve(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const long t = t0 + static_cast<long>(k);
    const Accumulated acc = accumulate(field, cells[k], t, opts, &positions[k]);
    const MassCentroid mc = to_mass_centroid(acc.moments, cells[k], opts.mass_floor);
    out.integral += acc.direct_cost;
    out.weighted += mc.mass * (positions[k] - mc.centroid).squaredNorm();
    out.residual += acc.moments.cost_about(mc.centroid);
    out.per_step.push_back(mc);
  }
  return out;
}

}  // namespace tvcov
