#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tvcov/coordinator.hpp"
#include "tvcov/message_bus.hpp"

using namespace tvcov;

namespace {

Vec v2(double a, double b) { return Eigen::Vector2d(a, b); }

AgentSpec integrator_agent(const Point& p, int horizon = 10) {
  AgentSpec a;
  a.model = std::make_shared<SingleIntegrator2D>(0.1, Box{v2(-2, -2), v2(2, 2)}, Box{v2(-1, -1), v2(1, 1)});
  a.tracker.q = 180.0 * Mat::Identity(2, 2);
  a.tracker.r = 0.1 * Mat::Identity(2, 2);
  a.tracker.gamma_bar = 5.0;
  a.tracker.alpha_n = 0.25;
  a.tracker.horizon = horizon;
  a.initial_state = p;
  return a;
}

FleetConfig fleet(const std::vector<Point>& starts, RunMode mode, long horizon, long k_interval) {
  FleetConfig f;
  f.mode = mode;
  f.horizon = horizon;
  f.k_interval = k_interval;
  for (const Point& p : starts) f.agents.push_back(integrator_agent(p));
  return f;
}

std::vector<Point> square(double s) { return {Point(s, s), Point(-s, s), Point(-s, -s), Point(s, -s)}; }

std::vector<Point> random_starts(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  std::vector<Point> p;
  while (p.size() < m) {
    const Point q(u(rng), u(rng));
    bool ok = true;
    for (const Point& o : p) ok = ok && (o - q).norm() > 0.3;
    if (ok) p.push_back(q);
  }
  return p;
}

RoundMessage vote(int sender, long round, bool accept) { return {sender, round, UpdateVote{accept}}; }

}  // namespace

TEST(MessageBus, ConsensusIsUnanimity) {
  EXPECT_TRUE(consensus_round({true, true, true}, 3));
  EXPECT_FALSE(consensus_round({true, false, true}, 3));
  EXPECT_TRUE(consensus_round({true}, 1));
  try {
    consensus_round({true, true}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingVote);
  }
}

TEST(MessageBus, GatherOrdersBySenderAndDrainsRound) {
  SynchronousBus bus;
  bus.publish(vote(2, 1, true));
  bus.publish(vote(0, 1, false));
  bus.publish(vote(1, 2, true));
  bus.publish(vote(1, 1, true));
  const auto msgs = bus.gather(1);
  ASSERT_EQ(msgs.size(), 3u);
  EXPECT_EQ(msgs[0].sender, 0);
  EXPECT_EQ(msgs[1].sender, 1);
  EXPECT_EQ(msgs[2].sender, 2);
  EXPECT_TRUE(bus.gather(1).empty());
  EXPECT_EQ(bus.gather(2).size(), 1u);
  EXPECT_EQ(collect_votes(msgs, 3), (std::vector<bool>{false, true, true}));
}

TEST(MessageBus, MissingOrDuplicateVotesAreErrors) {
  const std::vector<RoundMessage> missing{vote(0, 0, true), vote(2, 0, true)};
  const std::vector<RoundMessage> duplicate{vote(0, 0, true), vote(0, 0, true), vote(1, 0, true)};
  const std::vector<RoundMessage> stranger{vote(0, 0, true), vote(5, 0, true)};
  for (const auto& [msgs, agents] : {std::pair{missing, 3}, std::pair{duplicate, 2}, std::pair{stranger, 2}}) {
    try {
      collect_votes(msgs, static_cast<std::size_t>(agents));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MissingVote);
    }
  }
}

TEST(MessageBus, CollectPositionsIgnoresVotes) {
  std::vector<RoundMessage> msgs{
      {1, 0, ReferencePositions{{Point(1, 1)}}}, vote(0, 0, true), {0, 0, ReferencePositions{{Point(0, 0)}}}};
  const auto pos = collect_positions(msgs, 2);
  ASSERT_EQ(pos.size(), 2u);
  EXPECT_EQ(pos[0][0], Point(0, 0));
  EXPECT_EQ(pos[1][0], Point(1, 1));
  EXPECT_THROW(collect_positions({msgs[0]}, 2), Error);
}

TEST(Coordinator, RunModeNames) {
  for (RunMode m : {RunMode::LloydPeriodic, RunMode::PeriodicMpc, RunMode::NonperiodicMpc}) {
    EXPECT_EQ(run_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(run_mode_from_string("lloyd"), Error);
}

TEST(Coordinator, ValidateRejectsBadFleets) {
  auto code_of = [](const FleetConfig& f) -> std::optional<ErrorCode> {
    try {
      validate(f);
    } catch (const Error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  FleetConfig ok = fleet(square(0.5), RunMode::PeriodicMpc, 20, 5);
  EXPECT_EQ(code_of(ok), std::nullopt);

  FleetConfig empty = ok;
  empty.agents.clear();
  EXPECT_EQ(code_of(empty), ErrorCode::TooFewAgents);

  FleetConfig close = fleet({Point(0, 0), Point(0.1, 0)}, RunMode::PeriodicMpc, 20, 5);
  EXPECT_EQ(code_of(close), ErrorCode::ConfigError);

  FleetConfig edge = fleet({Point(1.97, 0)}, RunMode::PeriodicMpc, 20, 5);
  EXPECT_EQ(code_of(edge), ErrorCode::ConfigError);

  FleetConfig short_horizon = ok;
  short_horizon.agents[1].tracker.horizon = 4;  // N* = 8 for these constants
  try {
    validate(short_horizon);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("N* = 8"), std::string::npos) << e.what();
  }
  // Lloyd does not use the tracker, so its horizon does not matter.
  short_horizon.mode = RunMode::LloydPeriodic;
  EXPECT_EQ(code_of(short_horizon), std::nullopt);

  FleetConfig long_tracker = ok;
  long_tracker.horizon = 10;
  EXPECT_EQ(code_of(long_tracker), ErrorCode::ConfigError);

  FleetConfig moving = ok;
  moving.agents[0].model = std::make_shared<KinematicBicycle>(
      0.033, Box{Eigen::Vector4d(-2, -2, -1e3, -0.5), Eigen::Vector4d(2, 2, 1e3, 2.0)}, Box{v2(-0.7, -2), v2(0.7, 2)});
  moving.agents[0].initial_state = Eigen::Vector4d(0.5, 0.5, 0.0, 1.0);
  moving.mode = RunMode::LloydPeriodic;
  EXPECT_EQ(code_of(moving), ErrorCode::ConfigError);
}

TEST(Coordinator, LloydWithUnitPeriodMatchesPlainLloyd) {
  std::mt19937_64 rng(3);
  const std::vector<Point> starts = random_starts(4, rng);
  FleetConfig f = fleet(starts, RunMode::LloydPeriodic, 1, 1);
  f.lloyd_conv_tol = 1e-12;
  const RunLog log = run(f);
  ASSERT_FALSE(log.aborted) << log.abort_reason;
  EXPECT_TRUE(log.converged);

  const std::vector<oracle::P> box{{-2, -2}, {2, -2}, {2, 2}, {-2, 2}};
  const auto expected = oracle::lloyd({starts.begin(), starts.end()}, box, 10000, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LT((log.final_plans[i].positions[0] - expected[i]).norm(), 1e-3) << "agent " << i;
  }
}

TEST(Coordinator, SingleAgentLloydGoesToDensityCentroid) {
  FleetConfig f = fleet({Point(1.0, -0.5)}, RunMode::LloydPeriodic, 1, 1);
  f.density = DensityField::gaussian_static(0.3, Point(0.4, 0.2));
  f.lloyd_conv_tol = 1e-12;
  const RunLog log = run(f);
  ASSERT_FALSE(log.aborted);
  // Mass beyond 6 sigma of the arena edge is negligible.
  EXPECT_LT((log.final_plans[0].positions[0] - Point(0.4, 0.2)).norm(), 1e-4);
}

TEST(Coordinator, LloydCostNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed);
    FleetConfig f = fleet(random_starts(3, rng), RunMode::LloydPeriodic, 10, 1);
    f.density = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, 10);
    f.lloyd_max_iters = 30;
    const RunLog log = run(f);
    ASSERT_FALSE(log.aborted) << log.abort_reason;
    ASSERT_GE(log.lloyd_costs.size(), 2u);
    for (std::size_t j = 1; j < log.lloyd_costs.size(); ++j) {
      EXPECT_LE(log.lloyd_costs[j], log.lloyd_costs[j - 1] + 1e-6) << "seed " << seed << " iteration " << j;
    }
  }
}

TEST(Coordinator, CentroidalFleetStaysPut) {
  // Quadrant centres are the Lloyd fixed point for a uniform density.
  for (RunMode mode : {RunMode::PeriodicMpc, RunMode::NonperiodicMpc}) {
    FleetConfig f = fleet(square(1.0), mode, 20, 5);
    f.max_steps = 16;
    const RunLog log = run(f);
    ASSERT_FALSE(log.aborted) << log.abort_reason;
    ASSERT_EQ(log.steps.size(), 16u);
    EXPECT_EQ(log.rounds.size(), 4u);
    for (const StepRecord& s : log.steps) {
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_LT((s.positions[i] - square(1.0)[i]).norm(), 1e-6);
        EXPECT_LT(s.values[i], 1e-9);
      }
      EXPECT_NEAR(s.coverage_cost, log.steps.front().coverage_cost, 1e-9);
      EXPECT_TRUE(s.in_own_cells);
      EXPECT_EQ(s.swapped, s.t > 0 && s.t % 5 == 0);
    }
  }
}

TEST(Coordinator, FailedVoteKeepsPartitions) {
  FleetConfig f = fleet(square(0.5), RunMode::PeriodicMpc, 20, 5);
  f.density = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, 20);
  f.max_steps = 21;
  f.faults.push_back({2, 2});
  const RunLog log = run(f);
  ASSERT_FALSE(log.aborted) << log.abort_reason;
  ASSERT_EQ(log.rounds.size(), 5u);
  EXPECT_TRUE(log.rounds[0].votes.empty());
  EXPECT_FALSE(log.rounds[2].swapped);
  EXPECT_FALSE(log.rounds[2].votes[2]);
  EXPECT_FALSE(log.steps[10].swapped);
  EXPECT_TRUE(log.rounds[1].swapped);
  EXPECT_TRUE(log.rounds[3].swapped);
  EXPECT_EQ(log.first_swap_step(), 5);
  EXPECT_EQ(log.swap_count(), 3u);
}

TEST(Coordinator, ShortRunKeepsAgentsApartAndInsideCells) {
  for (RunMode mode : {RunMode::PeriodicMpc, RunMode::NonperiodicMpc}) {
    FleetConfig f = fleet(square(0.5), mode, 20, 5);
    f.density = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, 20);
    f.max_steps = 40;
    const RunLog log = run(f);
    ASSERT_FALSE(log.aborted) << log.abort_reason;
    for (const StepRecord& s : log.steps) {
      EXPECT_GE(s.min_distance, 2.0 * f.r_max - 1e-9);
      EXPECT_TRUE(s.in_own_cells) << "t = " << s.t;
    }
    for (const RoundRecord& r : log.rounds) {
      for (double v : r.values) EXPECT_LE(v, f.agents[0].tracker.v_max + 1e-6);
    }
    EXPECT_LT(log.steps.back().coverage_cost, log.steps.front().coverage_cost);
  }
}

TEST(Coordinator, PinnedReferenceKeepsShiftedPlan) {
  FleetConfig f = fleet(square(0.5), RunMode::PeriodicMpc, 20, 5);
  f.density = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, 20);
  f.max_steps = 45;
  f.pin_reference = true;
  const RunLog log = run(f);
  ASSERT_FALSE(log.aborted) << log.abort_reason;
  for (const RoundRecord& r : log.rounds) {
    for (bool kept : r.kept_candidate) EXPECT_TRUE(kept);
  }
  // The plan from t = 0 comes back after one full period.
  FleetConfig once = f;
  once.max_steps = 1;
  const RunLog first = run(once);
  ASSERT_EQ(log.final_plans.size(), first.final_plans.size());
  for (std::size_t i = 0; i < log.final_plans.size(); ++i) {
    const Trajectory expected = shift(first.final_plans[i].trajectory, log.final_plans[i].t0 % f.horizon, ShiftMode::Periodic);
    for (std::size_t k = 0; k < expected.states.size(); ++k) {
      EXPECT_LT((log.final_plans[i].trajectory.states[k] - expected.states[k]).norm(), 1e-8);
    }
  }
  EXPECT_GE(log.first_swap_step(), 0);
}

TEST(Coordinator, RunsAreDeterministic) {
  FleetConfig f = fleet(square(0.5), RunMode::NonperiodicMpc, 20, 5);
  f.density = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, 20);
  f.max_steps = 12;
  const RunLog a = run(f);
  const RunLog b = run(f);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t].positions, b.steps[t].positions);
    EXPECT_EQ(a.steps[t].values, b.steps[t].values);
    EXPECT_EQ(a.steps[t].coverage_cost, b.steps[t].coverage_cost);
  }
}

TEST(Coordinator, TrackerInfeasibilityAbortsTheRun) {
  // A negative membership tolerance makes every state fail the tracker's
  // start check, so the run must stop at its first step and say why.
  FleetConfig f = fleet(square(0.5), RunMode::PeriodicMpc, 20, 5);
  f.max_steps = 10;
  f.tracker.membership_tol = -1.0;
  const RunLog log = run(f);
  ASSERT_TRUE(log.aborted);
  ASSERT_TRUE(log.abort_code.has_value());
  EXPECT_EQ(*log.abort_code, ErrorCode::TrackerInfeasible);
  EXPECT_EQ(log.abort_step, 0);
  EXPECT_TRUE(log.steps.empty());
  EXPECT_NE(log.abort_reason.find("step 0"), std::string::npos) << log.abort_reason;
}
