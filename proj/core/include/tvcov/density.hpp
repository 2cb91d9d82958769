#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tvcov/geometry.hpp"

namespace tvcov {

enum class DensityKind { Uniform, GaussianCircular, GaussianWaypointPath, Custom };

struct Waypoint {
  double t = 0.0;  ///< step index (may be fractional)
  Point mean = Point::Zero();
};

/// Nonnegative time-varying importance function phi(q, t) over the arena,
/// with t a discrete step index. Immutable once built.
class DensityField {
 public:
  using Callable = std::function<double(const Point&, long)>;

  static DensityField uniform(double value = 1.0);
  /// Unnormalised Gaussian whose mean travels a circle once every
  /// `period_steps` steps, starting at angle `phase` (radians).
  static DensityField gaussian_circle(double sigma, const Point& center, double radius,
                                      long period_steps, double phase = 0.0);
  /// Unnormalised Gaussian whose mean interpolates linearly between
  /// waypoints; held at the first/last waypoint outside their time span.
  static DensityField gaussian_waypoints(double sigma, std::vector<Waypoint> waypoints);
  static DensityField gaussian_static(double sigma, const Point& mean);
  /// User supplied density. `resolution` is the largest triangle diameter the
  /// quadrature may use; `period` enables periodic shortcuts.
  static DensityField custom(Callable fn, double resolution, std::optional<long> period = {});

  double operator()(const Point& q, long t) const { return eval(q, t); }
  double eval(const Point& q, long t) const;

  DensityKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  std::optional<long> period() const { return period_; }
  Point mean(long t) const;

  /// Largest triangle diameter used by the polygon quadrature.
  double resolution() const { return resolution_; }
  DensityField with_resolution(double h) const;

  // Parameters of the built-in kinds, exposed for configuration echo.
  const Point& circle_center() const { return center_; }
  double circle_radius() const { return radius_; }
  double circle_phase() const { return phase_; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  double uniform_value() const { return value_; }

 private:
  DensityKind kind_ = DensityKind::Uniform;
  double value_ = 1.0;
  double sigma_ = 0.0;
  Point center_ = Point::Zero();
  double radius_ = 0.0;
  double phase_ = 0.0;
  std::vector<Waypoint> waypoints_;
  std::optional<long> period_;
  double resolution_ = 0.0;
  Callable custom_;
};

/// Raw density moments of a polygon about `origin`.
struct Moments {
  Point origin = Point::Zero();
  double mass = 0.0;                 ///< integral of phi
  Point first = Point::Zero();       ///< integral of (q - origin) phi
  double second = 0.0;               ///< integral of |q - origin|^2 phi

  /// Integral of |q - p|^2 phi for any p.
  double cost_about(const Point& p) const;
};

struct MassCentroid {
  double mass = 0.0;
  Point centroid = Point::Zero();
};

struct QuadratureOptions {
  double mass_floor = 1e-12;
  int max_depth = 10;  ///< cap on uniform triangle refinement levels
};

Moments density_moments(const DensityField& field, const ConvexPolygon& poly, long t,
                        const QuadratureOptions& opts = {});

/// Mass and density-weighted centroid. Cells whose mass falls below the
/// floor report zero mass and the polygon's area centroid.
MassCentroid mass_centroid(const DensityField& field, const ConvexPolygon& poly, long t,
                           const QuadratureOptions& opts = {});

/// Sum over agents of the integral of |q - p_i|^2 phi over cell i.
double locational_cost(const DensityField& field, std::span<const Point> positions,
                       std::span<const ConvexPolygon> partition, long t,
                       const QuadratureOptions& opts = {});

/// Horizon coverage cost of one agent in both forms.
struct HorizonCost {
  double integral = 0.0;   ///< sum_k integral |q - p_k|^2 phi(q, t0 + k)
  double weighted = 0.0;   ///< sum_k m_k |p_k - c_k|^2
  double residual = 0.0;   ///< d, independent of the positions
  std::vector<MassCentroid> per_step;

  double decomposed() const { return weighted + residual; }
};

HorizonCost horizon_cost(const DensityField& field, std::span<const Point> positions,
                         std::span<const ConvexPolygon> cells, long t0,
                         const QuadratureOptions& opts = {});

/// Generic integral of `fn` over a convex polygon using a fan triangulation and
/// a degree-6 symmetric Gauss rule, refining triangles whose diameter exceeds
/// `max_diameter`.
double integrate_polygon(const ConvexPolygon& poly, const std::function<double(const Point&)>& fn,
                         double max_diameter, int max_depth = 10);

}  // namespace tvcov
