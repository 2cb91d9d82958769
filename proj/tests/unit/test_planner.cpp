#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvcov/planner.hpp"

using namespace tvcov;

namespace {

const ConvexPolygon kArena = ConvexPolygon::box(-2, 2, -2, 2);
constexpr double kRmax = 0.05;
constexpr double kEps = 0.005;

Vec v2(double a, double b) { return Eigen::Vector2d(a, b); }

SingleIntegrator2D integrator(double dt = 0.1, double vmax = 1.0) {
  return SingleIntegrator2D(dt, Box{v2(-2, -2), v2(2, 2)}, Box{v2(-vmax, -vmax), v2(vmax, vmax)});
}

PartitionSlice static_slice(const std::vector<Point>& gens, std::size_t agent, std::size_t horizon) {
  return slice_for_agent(constant_partition_sequence(gens, kArena, kRmax, kEps, horizon), agent);
}

const std::vector<Point> kPair = {Point(-1, 0), Point(1, 0)};

// Oracle mass and centroid on a box cell by the midpoint rule.
std::pair<double, Point> grid_moments(double x0, double x1, double y0, double y1,
                                      const std::function<double(const Point&)>& phi) {
  const int n = 800;
  const double m = oracle::grid_integral(x0, x1, y0, y1, n, phi);
  const double mx = oracle::grid_integral(x0, x1, y0, y1, n, [&](const Point& q) { return q.x() * phi(q); });
  const double my = oracle::grid_integral(x0, x1, y0, y1, n, [&](const Point& q) { return q.y() * phi(q); });
  return {m, Point(mx / m, my / m)};
}

double stacked_distance(const Trajectory& a, const Trajectory& centre_traj, long offset, int n) {
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    s += (a.states[k] - reference_state(centre_traj, offset + k)).squaredNorm();
    s += (a.inputs[k] - reference_input(centre_traj, offset + k)).squaredNorm();
  }
  return std::sqrt(s);
}

}  // namespace

TEST(Shift, SequenceExamples) {
  const std::vector<int> s = {1, 2, 3};
  EXPECT_EQ(shift_sequence(s, 1, ShiftMode::Periodic), (std::vector<int>{2, 3, 1}));
  EXPECT_EQ(shift_sequence(s, 3, ShiftMode::Periodic), s);
  EXPECT_EQ(shift_sequence(s, 0, ShiftMode::Nonperiodic), s);
  EXPECT_EQ(shift_sequence(s, 2, ShiftMode::Nonperiodic), (std::vector<int>{3, 3, 3}));
  EXPECT_EQ(shift_sequence(s, 1, ShiftMode::Nonperiodic), (std::vector<int>{2, 3, 3}));
}

TEST(Shift, OutOfRangeThrows) {
  const std::vector<int> s = {1, 2, 3};
  for (long n : {-1L, 4L}) {
    try {
      shift_sequence(s, n, ShiftMode::Periodic);
      FAIL() << "expected BadShift";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadShift);
    }
  }
}

TEST(Shift, PeriodicTrajectoryRotatesAndStaysClosed) {
  const auto model = integrator();
  Trajectory t;
  t.tag = TrajectoryTag::Periodic;
  const std::vector<Point> ring = {Point(0, 0), Point(0.05, 0), Point(0.05, 0.05), Point(0, 0.05)};
  for (std::size_t k = 0; k < ring.size(); ++k) {
    t.states.push_back(ring[k]);
    t.inputs.push_back((ring[(k + 1) % ring.size()] - ring[k]) / model.dt());
  }
  t.states.push_back(ring[0]);
  ASSERT_LT(dynamics_residual(model, t), 1e-12);
  for (long n = 0; n <= 4; ++n) {
    const Trajectory s = shift(t, n, ShiftMode::Periodic);
    EXPECT_LT(dynamics_residual(model, s), 1e-12);
    EXPECT_LT(tag_residual(model, s), 1e-12);
    EXPECT_TRUE(s.states[0].isApprox(t.states[n % 4]));
  }
}

TEST(Shift, ReferenceIndexing) {
  Trajectory t;
  t.tag = TrajectoryTag::TerminalSteadyState;
  for (int k = 0; k < 3; ++k) {
    t.states.push_back(v2(k, 0));
    t.inputs.push_back(v2(0, k));
  }
  t.states.push_back(v2(2, 0));
  EXPECT_EQ(reference_state(t, 7)(0), 2.0);
  EXPECT_EQ(reference_input(t, 7)(1), 2.0);
  t.tag = TrajectoryTag::Periodic;
  t.states.back() = t.states.front();
  EXPECT_EQ(reference_state(t, 4)(0), 1.0);
  EXPECT_EQ(reference_input(t, 5)(1), 2.0);
}

TEST(CouplingBudget, WorkedExample) {
  const CouplingBudget b = coupling_budget(70.0, 70.0, 180.0, 0.95, 30);
  EXPECT_NEAR(b.value, 0.30542, 1e-5);
  EXPECT_DOUBLE_EQ(coupling_budget(0.0, 70.0, 180.0, 0.95, 30).value, 70.0 / 180.0);
}

TEST(CouplingBudget, DomainErrors) {
  auto expect_domain = [](auto&& fn) {
    try {
      fn();
      FAIL() << "expected BudgetDomain";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BudgetDomain);
    }
  };
  expect_domain([] { coupling_budget(71.0, 70.0, 180.0, 0.95, 30); });
  expect_domain([] { coupling_budget(1.0, 70.0, 180.0, 1.0, 30); });
  expect_domain([] { coupling_budget(1.0, 70.0, 0.0, 0.95, 30); });
  expect_domain([] { coupling_budget(-1.0, 70.0, 180.0, 0.95, 30); });
}

TEST(PlanPeriodic, SingleStepSitsAtCentroid) {
  const auto model = integrator();
  const auto field = DensityField::gaussian_static(0.4, Point(0.8, 0.5));
  const PartitionSlice slice = static_slice(kPair, 1, 1);
  const ReferencePlan plan = plan_periodic(model, slice, field, 0, std::nullopt);
  const auto [m, c] = grid_moments(0, 2, -2, 2, [&](const Point& q) { return field(q, 0); });
  EXPECT_NEAR((plan.positions[0] - c).norm(), 0.0, 1e-6);
  EXPECT_LT(plan.trajectory.inputs[0].norm(), 1e-6);
  EXPECT_NEAR(plan.objective, 0.0, 1e-10);
  EXPECT_GT(m, 0.0);
}

TEST(PlanPeriodic, AlternatingPeaksMatchBruteForce) {
  // Two steps, peaks alternating between two points further apart than one
  // step of motion can cover, so the speed limit binds.
  const double vmax = 3.0;
  const auto model = integrator(0.1, vmax);
  auto phi = [](const Point& q, long t) {
    const Point mu = (t % 2 == 0) ? Point(-1.0, 0.6) : Point(-1.0, -0.6);
    return std::exp(-(q - mu).squaredNorm() / (2 * 0.25 * 0.25));
  };
  const auto field = DensityField::custom(phi, 0.125, 2);
  const PartitionSlice slice = static_slice(kPair, 0, 2);
  const ReferencePlan plan = plan_periodic(model, slice, field, 0, std::nullopt);
  EXPECT_LT(reachability_violation(model, plan.trajectory, slice, kEps), 1e-7);

  const auto [m0, c0] = grid_moments(-2, 0, -2, 2, [&](const Point& q) { return phi(q, 0); });
  const auto [m1, c1] = grid_moments(-2, 0, -2, 2, [&](const Point& q) { return phi(q, 1); });
  auto cost = [&](const Point& p0, const Point& p1) {
    return m0 * (p0 - c0).squaredNorm() + m1 * (p1 - c1).squaredNorm();
  };
  // Brute force over the displacement d = p1 - p0; periodicity forces
  // |d|_inf <= dt (vmax - eps) and p0 is then a weighted mean.
  const double dmax = model.dt() * (vmax - kEps);
  const int g = 400;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= g; ++i) {
    for (int j = 0; j <= g; ++j) {
      const Point d(-dmax + 2 * dmax * i / g, -dmax + 2 * dmax * j / g);
      const Point p0 = (m0 * c0 + m1 * (c1 - d)) / (m0 + m1);
      best = std::min(best, cost(p0, p0 + d));
    }
  }
  const double got = cost(plan.positions[0], plan.positions[1]);
  EXPECT_NEAR(got, best, 1e-5 * (1.0 + best));
  EXPECT_NEAR(std::abs(plan.positions[1].y() - plan.positions[0].y()), dmax, 1e-6);
}

TEST(PlanPeriodic, ShiftedOptimumIsNotWorse) {
  const auto model = integrator();
  const long period = 12;
  const auto field = DensityField::gaussian_circle(0.3, Point(1.0, 0.0), 0.6, period);
  const PartitionSlice slice = static_slice(kPair, 1, period);
  const ReferencePlan plan = plan_periodic(model, slice, field, 0, std::nullopt);
  for (long n : {1L, 3L, 7L}) {
    const Trajectory cand = shift(plan.trajectory, n, ShiftMode::Periodic);
    const ReferencePlan next = plan_periodic(model, shift(slice, n, ShiftMode::Periodic), field, n, cand);
    EXPECT_LE(next.objective, plan.objective + 1e-8);
  }
}

TEST(PlanPeriodic, RandomInstancesAreReachable) {
  const auto model = integrator(0.1, 0.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  const auto field = DensityField::gaussian_circle(0.35, Point(0, 0), 0.9, 10);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Point> gens;
    for (int i = 0; i < 4; ++i) gens.emplace_back(u(rng), u(rng));
    const PartitionSequence seq = constant_partition_sequence(gens, kArena, kRmax, kEps, 10);
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const PartitionSlice slice = slice_for_agent(seq, i);
      const ReferencePlan plan = plan_periodic(model, slice, field, 0, std::nullopt);
      EXPECT_LT(reachability_violation(model, plan.trajectory, slice, kEps), 1e-7);
      EXPECT_NEAR(plan.coverage_value,
                  horizon_cost(field, plan.positions, slice.cells, 0).decomposed(),
                  1e-9 * (1.0 + plan.coverage_value));
    }
  }
}

TEST(PlanPeriodic, BicycleCircleIsReachable) {
  const Box xs{Eigen::Vector4d(-2, -2, -1e3, -0.5), Eigen::Vector4d(2, 2, 1e3, 2.0)};
  const Box us{v2(-0.7, -2.0), v2(0.7, 2.0)};
  const KinematicBicycle model(0.033, xs, us);
  const auto field = DensityField::gaussian_circle(0.3, Point(0, 0), 0.9, 20);
  const PartitionSlice slice = static_slice({Point(-1, -1), Point(1, 1)}, 1, 20);
  const ReferencePlan plan = plan_periodic(model, slice, field, 0, std::nullopt);
  EXPECT_LT(reachability_violation(model, plan.trajectory, slice, kEps), 1e-7);
}

TEST(PlanPeriodic, EmptyInteriorCellThrows) {
  const auto model = integrator();
  const PartitionSlice slice =
      slice_for_agent(constant_partition_sequence(kPair, kArena, 2.5, kEps, 3), 0);
  try {
    plan_periodic(model, slice, DensityField::uniform(), 0, std::nullopt);
    FAIL() << "expected PlannerInfeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PlannerInfeasible);
  }
}

TEST(PlanPeriodic, ObjectiveGradientsAgreeWithDifferences) {
  const Box xs{Eigen::Vector4d(-2, -2, -1e3, -0.5), Eigen::Vector4d(2, 2, 1e3, 2.0)};
  const Box us{v2(-0.7, -2.0), v2(0.7, 2.0)};
  const KinematicBicycle bike(0.033, xs, us);
  const auto field = DensityField::gaussian_circle(0.3, Point(0, 0), 0.9, 8);
  const PartitionSlice slice = static_slice(kPair, 0, 8);
  Trajectory guess = steady_trajectory(bike, Eigen::Vector4d(-1, 0, 0.3, 0.0), 8, TrajectoryTag::Periodic);
  for (auto& u : guess.inputs) u = v2(0.2, 0.5);
  guess.states.back() = guess.states.front();
  const NlpProblem problem = periodic_planning_problem(bike, slice, field, 0, guess);
  const GradientCheckReport report = check_gradients(problem, 5, 1e-5, 3);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

namespace {

struct CoupledSetup {
  SingleIntegrator2D model = integrator(0.1, 1.0);
  PartitionSlice slice = static_slice(kPair, 1, 10);
  DensityField old_field = DensityField::gaussian_static(0.3, Point(0.6, 0.0));
  DensityField new_field = DensityField::gaussian_static(0.3, Point(1.3, 0.7));
  ReferencePlan prev = plan_periodic(model, slice, old_field, 0, std::nullopt);
};

}  // namespace

TEST(PlanCoupled, ZeroBudgetReturnsShiftedPlan) {
  CoupledSetup s;
  const ReferencePlan p = plan_periodic_coupled(s.model, s.slice, s.new_field, 3, s.prev, 3, 4, 0.0);
  const Trajectory expected = shift(s.prev.trajectory, 3, ShiftMode::Periodic);
  for (std::size_t k = 0; k < expected.states.size(); ++k) {
    EXPECT_TRUE(p.trajectory.states[k].isApprox(expected.states[k], 1e-12));
  }
  EXPECT_TRUE(p.kept_candidate);
}

TEST(PlanCoupled, UnboundedBudgetMatchesUncoupled) {
  CoupledSetup s;
  const ReferencePlan coupled = plan_periodic_coupled(s.model, s.slice, s.new_field, 3, s.prev, 3, 4, 1e9);
  const ReferencePlan free = plan_periodic(s.model, s.slice, s.new_field, 3, std::nullopt);
  EXPECT_NEAR(coupled.objective, free.objective, 1e-6 * (1.0 + free.objective));
}

TEST(PlanCoupled, BindingBudgetIsMetExactly) {
  CoupledSetup s;
  const double budget = 0.05;
  const ReferencePlan p = plan_periodic_coupled(s.model, s.slice, s.new_field, 3, s.prev, 3, 4, budget);
  const double dist = stacked_distance(p.trajectory, s.prev.trajectory, 3, 4);
  EXPECT_NEAR(dist, budget, 1e-6);
  EXPECT_LT(p.objective, evaluate_plan(s.model, shift(s.prev.trajectory, 3, ShiftMode::Periodic), s.slice,
                                       s.new_field, 3)
                             .objective);
  EXPECT_LT(reachability_violation(s.model, p.trajectory, s.slice, kEps), 1e-7);
}

TEST(PlanNonperiodic, StaticOptimumIsAFixedPoint) {
  const auto model = integrator();
  const auto field = DensityField::gaussian_static(0.3, Point(0.9, 0.4));
  const PartitionSlice slice = static_slice(kPair, 1, 12);
  const auto [m, c] = grid_moments(0, 2, -2, 2, [&](const Point& q) { return field(q, 0); });
  // Rest at the library centroid, which must agree with the grid oracle.
  const Vec lib_rest = mass_centroid(field, slice.cells[0], 0).centroid;
  ASSERT_GT(m, 0.0);
  ASSERT_LT((lib_rest - Vec(c)).norm(), 1e-5);
  const ReferencePlan prev = evaluate_plan(
      model, steady_trajectory(model, lib_rest, 12, TrajectoryTag::TerminalSteadyState), slice, field, 0);
  const ReferencePlan next = plan_nonperiodic(model, slice, field, 4, prev, 4, 5);
  for (std::size_t k = 0; k < next.trajectory.states.size(); ++k) {
    EXPECT_LT((next.trajectory.states[k] - lib_rest).norm(), 1e-6);
  }
}

TEST(PlanNonperiodic, PinsPrefixAndEndsAtRest) {
  const auto model = integrator(0.1, 1.0);
  const auto field = DensityField::gaussian_waypoints(0.3, {{0, Point(0.5, -0.5)}, {30, Point(1.2, 0.8)}});
  const PartitionSlice slice = static_slice(kPair, 1, 15);
  const Vec start = v2(0.4, -1.0);
  const ReferencePlan prev =
      evaluate_plan(model, steady_trajectory(model, start, 15, TrajectoryTag::TerminalSteadyState), slice, field, 0);
  const long k_int = 5;
  const int n = 4;
  const ReferencePlan next = plan_nonperiodic(model, slice, field, k_int, prev, k_int, n);
  for (int k = 0; k <= n; ++k) {
    EXPECT_LT((next.trajectory.states[k] - reference_state(prev.trajectory, k_int + k)).norm(), 1e-9);
    EXPECT_LT((next.trajectory.inputs[k] - reference_input(prev.trajectory, k_int + k)).norm(), 1e-9);
  }
  EXPECT_LT(tag_residual(model, next.trajectory), 1e-7);
  EXPECT_LT(reachability_violation(model, next.trajectory, slice, kEps), 1e-7);
  const Point target = mass_centroid(field, slice.cells.back(), k_int + 14).centroid;
  EXPECT_LT((next.positions.back() - target).norm(), (Point(start) - target).norm());
}

TEST(PlanNonperiodic, RejectsPeriodicPrevious) {
  const auto model = integrator();
  const PartitionSlice slice = static_slice(kPair, 1, 6);
  const ReferencePlan prev = plan_periodic(model, slice, DensityField::uniform(), 0, std::nullopt);
  try {
    plan_nonperiodic(model, slice, DensityField::uniform(), 0, prev, 1, 2);
    FAIL() << "expected DomainError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
}
