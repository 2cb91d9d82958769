#include "tvcov/dynamics.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <random>

#include "tvcov/errors.hpp"

namespace tvcov {

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lower.size()) fail(ErrorCode::DimensionMismatch, "box dimension mismatch");
  return violation(x) <= tol;
}

double Box::violation(const Vec& x) const {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
  }
  return worst;
}

Box Box::shrunk(double margin) const {
  Box b{lower.array() + margin, upper.array() - margin};
  if ((b.lower.array() > b.upper.array()).any()) {
    fail(ErrorCode::DomainError, "box shrink by margin leaves it empty");
  }
  return b;
}

AgentModel::AgentModel(Mat c, Box state_box, Box input_box, double dt)
    : c_(std::move(c)), state_box_(std::move(state_box)), input_box_(std::move(input_box)), dt_(dt) {
  if (state_box_.lower.size() != state_box_.upper.size() ||
      input_box_.lower.size() != input_box_.upper.size()) {
    fail(ErrorCode::DimensionMismatch, "box bounds differ in length");
  }
  if (c_.rows() != 2 || c_.cols() != state_box_.dim()) {
    fail(ErrorCode::DimensionMismatch, "output matrix must be 2 x state_dim");
  }
  if (Eigen::FullPivLU<Mat>(c_).rank() != 2) {
    fail(ErrorCode::DomainError, "output matrix must have full row rank");
  }
  if ((state_box_.lower.array() > state_box_.upper.array()).any() ||
      (input_box_.lower.array() > input_box_.upper.array()).any()) {
    fail(ErrorCode::DomainError, "empty state or input box");
  }
  if (!(dt_ > 0.0)) fail(ErrorCode::DomainError, "sampling time must be positive");
}

double AgentModel::output_norm() const {
  return Eigen::JacobiSVD<Mat>(c_).singularValues()(0);
}

void AgentModel::check_dims(const Vec& x, const Vec& u) const {
  if (x.size() != state_dim() || u.size() != input_dim()) {
    fail(ErrorCode::DimensionMismatch, "state or input has the wrong dimension");
  }
}

Vec AgentModel::step(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  return do_step(x, u);
}

void AgentModel::jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const {
  check_dims(x, u);
  do_jacobians(x, u, a, b);
}

void AgentModel::weighted_hessian(const Vec& x, const Vec& u, const Vec& w, Mat& h) const {
  check_dims(x, u);
  if (w.size() != state_dim()) fail(ErrorCode::DimensionMismatch, "one weight per state component");
  do_weighted_hessian(x, u, w, h);
}

void AgentModel::do_weighted_hessian(const Vec& x, const Vec& u, const Vec& w, Mat& h) const {
  const int n = state_dim(), m = input_dim();
  h.setZero(n + m, n + m);
  Mat ap, bp, am, bm;
  for (int j = 0; j < n + m; ++j) {
    Vec xp = x, xm = x, up = u, um = u;
    double& vp = j < n ? xp(j) : up(j - n);
    double& vm = j < n ? xm(j) : um(j - n);
    const double step = 1e-5 * std::max(1.0, std::abs(vp));
    vp += step;
    vm -= step;
    do_jacobians(xp, up, ap, bp);
    do_jacobians(xm, um, am, bm);
    h.block(0, j, n, 1) = (ap - am).transpose() * w / (2.0 * step);
    h.block(n, j, m, 1) = (bp - bm).transpose() * w / (2.0 * step);
  }
  h = 0.5 * (h + h.transpose()).eval();
}

Point AgentModel::output(const Vec& x) const {
  if (x.size() != state_dim()) fail(ErrorCode::DimensionMismatch, "state has the wrong dimension");
  return c_ * x;
}

Vec AgentModel::rest_state(const Point& p) const {
  Vec x = state_box_.center();
  x += c_.completeOrthogonalDecomposition().solve(p - c_ * x);
  return x;
}

LinearModel::LinearModel(Mat a, Mat b, Mat c, Box state_box, Box input_box, double dt)
    : AgentModel(std::move(c), std::move(state_box), std::move(input_box), dt),
      a_(std::move(a)),
      b_(std::move(b)) {
  if (a_.rows() != state_dim() || a_.cols() != state_dim() || b_.rows() != state_dim() ||
      b_.cols() != input_dim()) {
    fail(ErrorCode::DimensionMismatch, "linear model matrices do not match the boxes");
  }
}

Vec LinearModel::do_step(const Vec& x, const Vec& u) const { return a_ * x + b_ * u; }

void LinearModel::do_jacobians(const Vec&, const Vec&, Mat& a, Mat& b) const {
  a = a_;
  b = b_;
}

void LinearModel::do_weighted_hessian(const Vec&, const Vec&, const Vec&, Mat& h) const {
  h.setZero(state_dim() + input_dim(), state_dim() + input_dim());
}

std::optional<Vec> LinearModel::steady_input(const Vec& x) const {
  const Vec rhs = x - a_ * x;
  const Vec u = b_.completeOrthogonalDecomposition().solve(rhs);
  if ((b_ * u - rhs).lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
    return std::nullopt;
  }
  return u;
}

std::shared_ptr<AgentModel> LinearModel::clone() const {
  return std::make_shared<LinearModel>(*this);
}

SingleIntegrator2D::SingleIntegrator2D(double dt, Box position_box, Box velocity_box)
    : LinearModel(Mat::Identity(2, 2), dt * Mat::Identity(2, 2), Mat::Identity(2, 2),
                  std::move(position_box), std::move(velocity_box), dt) {}

std::shared_ptr<AgentModel> SingleIntegrator2D::clone() const {
  return std::make_shared<SingleIntegrator2D>(*this);
}

namespace {

// Slip angle b = atan(r) with r = lr tan(steer) / (lr + lf); its sine and
// cosine are formed directly from r.
template <class S>
Eigen::Matrix<S, 4, 1> bicycle_rhs(const Eigen::Matrix<S, 4, 1>& x, const S& steer, const S& accel,
                                   double lr, double lf) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  using std::tan;
  const S ratio = lr * tan(steer) / (lr + lf);
  const S hyp = sqrt(1.0 + ratio * ratio);
  const S sin_slip = ratio / hyp;
  const S cos_slip = 1.0 / hyp;
  const S c = cos(x(2)), s = sin(x(2));
  Eigen::Matrix<S, 4, 1> dx;
  dx << x(3) * (c * cos_slip - s * sin_slip), x(3) * (s * cos_slip + c * sin_slip),
      x(3) / lr * sin_slip, accel;
  return dx;
}

template <class S>
Eigen::Matrix<S, 4, 1> bicycle_rk4(const Eigen::Matrix<S, 4, 1>& x, const S& steer, const S& accel,
                                   double dt, double lr, double lf) {
  const auto k1 = bicycle_rhs<S>(x, steer, accel, lr, lf);
  const auto k2 = bicycle_rhs<S>(Eigen::Matrix<S, 4, 1>(x + (0.5 * dt) * k1), steer, accel, lr, lf);
  const auto k3 = bicycle_rhs<S>(Eigen::Matrix<S, 4, 1>(x + (0.5 * dt) * k2), steer, accel, lr, lf);
  const auto k4 = bicycle_rhs<S>(Eigen::Matrix<S, 4, 1>(x + dt * k3), steer, accel, lr, lf);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

KinematicBicycle::KinematicBicycle(double dt, Box state_box, Box input_box, double l_rear,
                                   double l_front)
    : AgentModel((Mat(2, 4) << 1, 0, 0, 0, 0, 1, 0, 0).finished(), std::move(state_box),
                 std::move(input_box), dt),
      l_rear_(l_rear),
      l_front_(l_front) {
  if (state_dim() != 4 || input_dim() != 2) {
    fail(ErrorCode::DimensionMismatch, "bicycle needs a 4-d state box and a 2-d input box");
  }
  if (!(l_rear_ > 0.0) || !(l_front_ >= 0.0)) fail(ErrorCode::DomainError, "bad axle lengths");
}

Vec KinematicBicycle::do_step(const Vec& x, const Vec& u) const {
  const Eigen::Vector4d x4 = x;
  return bicycle_rk4<double>(x4, u(0), u(1), dt(), l_rear_, l_front_);
}

void KinematicBicycle::do_jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const {
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 6, 1>>;
  Eigen::Matrix<AD, 4, 1> xs;
  for (int j = 0; j < 4; ++j) xs(j) = AD(x(j), 6, j);
  const AD steer(u(0), 6, 4);
  const AD accel(u(1), 6, 5);
  const auto next = bicycle_rk4<AD>(xs, steer, accel, dt(), l_rear_, l_front_);
  a.resize(4, 4);
  b.resize(4, 2);
  for (int i = 0; i < 4; ++i) {
    a.row(i) = next(i).derivatives().head<4>().transpose();
    b.row(i) = next(i).derivatives().tail<2>().transpose();
  }
}

std::optional<Vec> KinematicBicycle::steady_input(const Vec& x) const {
  if (x.size() != 4) fail(ErrorCode::DimensionMismatch, "state has the wrong dimension");
  if (std::abs(x(3)) > 1e-12) return std::nullopt;
  return Vec::Zero(2);
}

Vec KinematicBicycle::rest_state(const Point& p) const {
  return Eigen::Vector4d(p.x(), p.y(), 0.0, 0.0);
}

std::shared_ptr<AgentModel> KinematicBicycle::clone() const {
  return std::make_shared<KinematicBicycle>(*this);
}

double estimate_lipschitz(const AgentModel& model, int samples, std::uint64_t seed) {
  if (samples < 1000) fail(ErrorCode::DomainError, "Lipschitz estimation needs >= 1000 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Box& box) {
    Vec v(box.dim());
    for (int j = 0; j < box.dim(); ++j) {
      v(j) = box.lower(j) + unit(rng) * (box.upper(j) - box.lower(j));
    }
    return v;
  };
  double worst = 0.0;
  Mat a, b;
  for (int s = 0; s < samples; ++s) {
    const Vec x = draw(model.state_box());
    const Vec x2 = draw(model.state_box());
    const Vec u = draw(model.input_box());
    const double dx = (x - x2).norm();
    if (dx > 0.0) worst = std::max(worst, (model.step(x, u) - model.step(x2, u)).norm() / dx);
    model.jacobians(x, u, a, b);
    worst = std::max(worst, Eigen::JacobiSVD<Mat>(a).singularValues()(0));
  }
  return 1.1 * worst;
}

}  // namespace tvcov
