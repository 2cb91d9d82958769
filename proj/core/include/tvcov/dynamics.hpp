#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tvcov/geometry.hpp"

namespace tvcov {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box {x : lower <= x <= upper}.
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& x, double tol = 0.0) const;
  /// Every face moved inward by `margin`. Throws DomainError if that empties it.
  Box shrunk(double margin) const;
  Vec center() const { return 0.5 * (lower + upper); }
  /// Largest violation of the box by x (0 if inside).
  double violation(const Vec& x) const;
};

/// Discrete-time agent model x+ = f(x, u) with output p = C x.
class AgentModel {
 public:
  virtual ~AgentModel() = default;

  int state_dim() const { return state_box_.dim(); }
  int input_dim() const { return input_box_.dim(); }
  double dt() const { return dt_; }
  const Box& state_box() const { return state_box_; }
  const Box& input_box() const { return input_box_; }
  const Mat& output_matrix() const { return c_; }
  /// Spectral norm of the output matrix.
  double output_norm() const;

  /// State Lipschitz constant of f at fixed input; NaN until assigned.
  double lipschitz() const { return lipschitz_; }
  void set_lipschitz(double value) { lipschitz_ = value; }

  Vec step(const Vec& x, const Vec& u) const;
  /// Partial derivatives of f: a = df/dx, b = df/du.
  void jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const;
  Point output(const Vec& x) const;
  /// sum_i w_i times the Hessian of f_i in the stacked variable (x, u).
  void weighted_hessian(const Vec& x, const Vec& u, const Vec& w, Mat& h) const;

  /// An input u with f(x, u) = x, if one exists.
  virtual std::optional<Vec> steady_input(const Vec& x) const = 0;
  /// A state with output p meant to admit a steady input. The default moves
  /// the state-box centre onto p along the output directions.
  virtual Vec rest_state(const Point& p) const;
  virtual std::string type_name() const = 0;
  virtual std::shared_ptr<AgentModel> clone() const = 0;

 protected:
  AgentModel(Mat c, Box state_box, Box input_box, double dt);

  virtual Vec do_step(const Vec& x, const Vec& u) const = 0;
  virtual void do_jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const = 0;
  /// Default: central differences of the Jacobians.
  virtual void do_weighted_hessian(const Vec& x, const Vec& u, const Vec& w, Mat& h) const;

 private:
  void check_dims(const Vec& x, const Vec& u) const;

  Mat c_;
  Box state_box_;
  Box input_box_;
  double dt_;
  double lipschitz_ = std::numeric_limits<double>::quiet_NaN();
};

using ModelPtr = std::shared_ptr<const AgentModel>;

/// x+ = A x + B u.
class LinearModel : public AgentModel {
 public:
  LinearModel(Mat a, Mat b, Mat c, Box state_box, Box input_box, double dt);

  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }

  std::optional<Vec> steady_input(const Vec& x) const override;
  std::string type_name() const override { return "linear"; }
  std::shared_ptr<AgentModel> clone() const override;

 protected:
  Vec do_step(const Vec& x, const Vec& u) const override;
  void do_jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const override;
  void do_weighted_hessian(const Vec& x, const Vec& u, const Vec& w, Mat& h) const override;

 private:
  Mat a_;
  Mat b_;
};

/// Planar single integrator p+ = p + dt u.
class SingleIntegrator2D : public LinearModel {
 public:
  SingleIntegrator2D(double dt, Box position_box, Box velocity_box);

  std::string type_name() const override { return "single_integrator"; }
  std::shared_ptr<AgentModel> clone() const override;
};

/// Kinematic bicycle, state (px, py, heading, speed), input (steering, acceleration),
/// discretised with one classical Runge-Kutta step per sample.
class KinematicBicycle : public AgentModel {
 public:
  KinematicBicycle(double dt, Box state_box, Box input_box, double l_rear = 0.05,
                   double l_front = 0.05);

  double l_rear() const { return l_rear_; }
  double l_front() const { return l_front_; }

  std::optional<Vec> steady_input(const Vec& x) const override;
  /// Position p, zero heading and zero speed.
  Vec rest_state(const Point& p) const override;
  std::string type_name() const override { return "kinematic_bicycle"; }
  std::shared_ptr<AgentModel> clone() const override;

 protected:
  Vec do_step(const Vec& x, const Vec& u) const override;
  void do_jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const override;

 private:
  double l_rear_;
  double l_front_;
};

/// Sampled estimate of the state Lipschitz constant over the state and input
/// boxes, inflated by 1.1. Requires samples >= 1000.
double estimate_lipschitz(const AgentModel& model, int samples, std::uint64_t seed = 0);

enum class TrajectoryTag { Plain, Periodic, TerminalSteadyState };

std::string_view to_string(TrajectoryTag tag);

/// L inputs and L+1 states.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  TrajectoryTag tag = TrajectoryTag::Plain;

  std::size_t length() const { return inputs.size(); }
};

/// max_k |states[k+1] - f(states[k], inputs[k])|_inf.
double dynamics_residual(const AgentModel& model, const Trajectory& traj);
/// Periodic: |x_0 - x_L|; terminal steady state: |f(x_{L-1}, u_{L-1}) - x_{L-1}|; plain: 0.
double tag_residual(const AgentModel& model, const Trajectory& traj);
/// Outputs of the first `count` states (all states when count is omitted).
std::vector<Point> trajectory_positions(const AgentModel& model, const Trajectory& traj,
                                        std::optional<std::size_t> count = {});
/// Constant trajectory resting at a steady state.
Trajectory steady_trajectory(const AgentModel& model, const Vec& x, std::size_t length,
                             TrajectoryTag tag);

}  // namespace tvcov
