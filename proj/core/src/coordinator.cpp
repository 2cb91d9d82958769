#include "tvcov/coordinator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tvcov/message_bus.hpp"

namespace tvcov {

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::LloydPeriodic: return "lloyd_periodic";
    case RunMode::PeriodicMpc: return "periodic_mpc";
    case RunMode::NonperiodicMpc: return "nonperiodic_mpc";
  }
  return "periodic_mpc";
}

RunMode run_mode_from_string(std::string_view text) {
  for (RunMode m : {RunMode::LloydPeriodic, RunMode::PeriodicMpc, RunMode::NonperiodicMpc}) {
    if (to_string(m) == text) return m;
  }
  fail(ErrorCode::ConfigError, "unknown run mode '" + std::string(text) + "'");
}

long RunLog::first_swap_step() const {
  for (const StepRecord& s : steps) {
    if (s.swapped) return s.t;
  }
  return -1;
}

std::size_t RunLog::swap_count() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const StepRecord& s) { return s.swapped; }));
}

namespace {

std::vector<Point> initial_positions(const FleetConfig& c) {
  std::vector<Point> p;
  for (const AgentSpec& a : c.agents) p.push_back(a.model->output(a.initial_state));
  return p;
}

std::string agent_prefix(std::size_t i) { return "agent " + std::to_string(i) + ": "; }

double smallest_distance(const std::vector<Point>& p) {
  return p.size() < 2 ? std::numeric_limits<double>::infinity() : min_pairwise_distance(p);
}

RunLog empty_log(const FleetConfig& c) {
  RunLog log;
  log.mode = c.mode;
  log.seed = c.seed;
  log.horizon = c.horizon;
  log.k_interval = c.k_interval;
  log.agents = c.size();
  return log;
}

bool aborts_run(ErrorCode code) {
  return code == ErrorCode::TrackerInfeasible || code == ErrorCode::PlannerInfeasible ||
         code == ErrorCode::BudgetDomain;
}

/// A partition sequence whose entry 0 belongs to absolute time t0. Later
/// times wrap around (periodic) or hold the last entry (nonperiodic).
struct AnchoredPartition {
  PartitionSequence seq;
  long t0 = 0;
  ShiftMode mode = ShiftMode::Periodic;

  std::size_t index(long t) const { return extended_index(t - t0, seq.horizon(), mode); }

  PartitionSlice slice(std::size_t agent, long t, long length) const {
    PartitionSlice s;
    for (long k = 0; k < length; ++k) {
      const std::size_t idx = index(t + k);
      s.cells.push_back(seq.cells[idx][agent]);
      s.eroded.push_back(seq.eroded[idx][agent]);
      s.interior.push_back(seq.interior[idx][agent]);
    }
    return s;
  }

  std::vector<ConvexPolygon> eroded(std::size_t agent, long t, long length) const {
    std::vector<ConvexPolygon> out;
    for (long k = 0; k < length; ++k) out.push_back(seq.eroded[index(t + k)][agent]);
    return out;
  }
};

struct AgentState {
  Vec x;
  ReferencePlan active;  // reference currently tracked, entry 0 at active.t0
  ReferencePlan next;    // reference planned for the next round
  TrackerSolution last;
  ReferenceSegment last_segment;
};

class MpcRunner {
 public:
  MpcRunner(const FleetConfig& config, bool periodic)
      : c_(config),
        periodic_(periodic),
        mode_(periodic ? ShiftMode::Periodic : ShiftMode::Nonperiodic),
        tag_(periodic ? TrajectoryTag::Periodic : TrajectoryTag::TerminalSteadyState) {}

  RunLog run() {
    validate(c_);
    RunLog log = empty_log(c_);
    const std::size_t m = c_.size();
    agents_.resize(m);
    w_ = {constant_partition_sequence(initial_positions(c_), c_.arena, c_.r_max, c_.epsilon,
                                      static_cast<std::size_t>(c_.horizon)),
          0, mode_};
    long t = 0;
    try {
      for (std::size_t i = 0; i < m; ++i) {
        agents_[i].x = c_.agents[i].initial_state;
        agents_[i].active = initial_plan(i);
      }
      for (t = 0; t < c_.max_steps; ++t) step(t, log);
    } catch (const Error& e) {
      if (!aborts_run(e.code())) throw;
      log.aborted = true;
      log.abort_code = e.code();
      log.abort_step = t;
      std::ostringstream os;
      os << "step " << t << ": " << e.what();
      log.abort_reason = os.str();
    }
    for (const AgentState& a : agents_) log.final_plans.push_back(a.active);
    return log;
  }

 private:
  const AgentModel& model(std::size_t i) const { return *c_.agents[i].model; }
  const TrackerConstants& consts(std::size_t i) const { return c_.agents[i].tracker; }
  int n_track(std::size_t i) const { return consts(i).horizon; }

  // Reference at t = 0: the planner starts from the agent resting at its
  // initial state, for which the tracking value is zero.
  ReferencePlan initial_plan(std::size_t i) const {
    const PartitionSlice slice = w_.slice(i, 0, c_.horizon);
    const Trajectory rest =
        steady_trajectory(model(i), c_.agents[i].initial_state, static_cast<std::size_t>(c_.horizon), tag_);
    const ReferencePlan prev = evaluate_plan(model(i), rest, slice, c_.density, 0, c_.planner.quadrature);
    if (periodic_) {
      const auto& k = consts(i);
      const double budget = coupling_budget(0.0, k.v_max, k.l_v, k.decay(), 0).value;
      return plan_periodic_coupled(model(i), slice, c_.density, 0, prev, 0, n_track(i), budget, c_.planner);
    }
    return plan_nonperiodic(model(i), slice, c_.density, 0, prev, 0, n_track(i), c_.planner);
  }

  bool faulted(std::size_t i, long round) const {
    return std::any_of(c_.faults.begin(), c_.faults.end(), [&](const CandidateFault& f) {
      return f.agent == static_cast<int>(i) && f.round == round;
    });
  }

  // Moves the last candidate position far outside the arena.
  void corrupt(std::size_t i, Trajectory& cand) const {
    const Mat& out = model(i).output_matrix();
    cand.states.back() += out.completeOrthogonalDecomposition().solve(Eigen::Vector2d(1e3, 1e3));
  }

  long shift_amount() const {
    return periodic_ ? c_.k_interval % c_.horizon : std::min(c_.k_interval, c_.horizon);
  }

  void step(long t, RunLog& log) {
    const std::size_t m = c_.size();
    const long k_int = c_.k_interval;
    const bool round = t % k_int == 0;
    const long j = t / k_int;
    StepRecord rec;
    rec.t = t;
    RoundRecord rr;
    rr.t = t;

    if (round && t > 0) {
      for (std::size_t i = 0; i < m; ++i) {
        Trajectory cand = candidate_trajectory(model(i), agents_[i].last, agents_[i].last_segment);
        if (faulted(i, j)) corrupt(i, cand);
        const bool vote = check_update_condition(model(i), cand, cand_w_.eroded(i, t, n_track(i) + 1));
        bus_.publish({static_cast<int>(i), j, UpdateVote{vote}});
      }
      rr.votes = collect_votes(bus_.gather(j), m);
      rr.swapped = consensus_round(rr.votes, m);
      if (rr.swapped) w_ = cand_w_;
      for (AgentState& a : agents_) a.active = a.next;
      rec.swapped = rr.swapped;
    }

    for (std::size_t i = 0; i < m; ++i) {
      AgentState& a = agents_[i];
      const ReferenceSegment seg = reference_segment(a.active.trajectory, t - a.active.t0, n_track(i));
      std::optional<Trajectory> warm;
      if (t > 0) warm = candidate_trajectory(model(i), a.last, a.last_segment);
      a.last = solve_tracking(model(i), a.x, seg, w_.eroded(i, t, n_track(i)), consts(i), warm, c_.tracker);
      a.last_segment = seg;
      const Point p = model(i).output(a.x);
      rec.positions.push_back(p);
      rec.values.push_back(a.last.value);
      rec.stage_costs.push_back(stage_cost(a.x, a.last.first_input, seg.states[0], seg.inputs[0], consts(i)));
      rec.ref_distance.push_back((p - model(i).output(seg.states[0])).norm());
      rec.in_own_cells = rec.in_own_cells && contains(w_.seq.eroded[w_.index(t)][i], p, 1e-9);
    }

    if (round) {
      rr.values = rec.values;
      for (std::size_t i = 0; i < m; ++i) {
        AgentState& a = agents_[i];
        const PartitionSlice slice = w_.slice(i, t + k_int, c_.horizon);
        const auto& k = consts(i);
        double budget = std::numeric_limits<double>::quiet_NaN();
        if (c_.pin_reference) {
          a.next = evaluate_plan(model(i), shift(a.active.trajectory, shift_amount(), mode_), slice, c_.density,
                                 t + k_int, c_.planner.quadrature);
          a.next.kept_candidate = true;
        } else if (periodic_) {
          budget = coupling_budget(a.last.value, k.v_max, k.l_v, k.decay(), k_int).value;
          a.next = plan_periodic_coupled(model(i), slice, c_.density, t + k_int, a.active, k_int, n_track(i), budget,
                                         c_.planner);
        } else {
          a.next = plan_nonperiodic(model(i), slice, c_.density, t + k_int, a.active, k_int, n_track(i), c_.planner);
        }
        rr.budgets.push_back(budget);
        rr.kept_candidate.push_back(a.next.kept_candidate);
        bus_.publish({static_cast<int>(i), j, ReferencePositions{a.next.positions}});
      }
      const auto broadcast = collect_positions(bus_.gather(j), m);
      std::vector<std::vector<Point>> by_time(static_cast<std::size_t>(c_.horizon), std::vector<Point>(m));
      for (std::size_t i = 0; i < m; ++i) {
        for (long k = 0; k < c_.horizon; ++k) by_time[k][i] = broadcast[i][k];
      }
      cand_w_ = {build_partition_sequence(by_time, c_.arena, c_.r_max, c_.epsilon), t + k_int, mode_};
      log.rounds.push_back(std::move(rr));
    }

    rec.min_distance = smallest_distance(rec.positions);
    rec.coverage_cost = locational_cost(c_.density, rec.positions, voronoi_partition(rec.positions, c_.arena), t,
                                        c_.planner.quadrature);
    log.steps.push_back(std::move(rec));
    for (std::size_t i = 0; i < m; ++i) agents_[i].x = closed_loop_step(model(i), agents_[i].x, agents_[i].last);
  }

  const FleetConfig& c_;
  bool periodic_;
  ShiftMode mode_;
  TrajectoryTag tag_;
  std::vector<AgentState> agents_;
  AnchoredPartition w_;       // partitions in force
  AnchoredPartition cand_w_;  // partitions proposed by the last broadcast
  SynchronousBus bus_;
};

}  // namespace

void validate(const FleetConfig& c) {
  if (c.agents.empty()) fail(ErrorCode::TooFewAgents, "the fleet has no agents");
  auto config_error = [](const std::string& msg) { fail(ErrorCode::ConfigError, msg); };
  if (c.arena.is_empty()) config_error("arena is empty");
  if (c.horizon < 1) config_error("period T must be at least 1");
  if (c.k_interval < 1) config_error("planner interval K must be at least 1");
  if (!(c.r_max > 0.0) || !(c.epsilon > 0.0)) config_error("R_max and epsilon must be positive");
  if (c.max_steps < 0) config_error("max_steps must be nonnegative");
  if (c.mode == RunMode::LloydPeriodic && (c.lloyd_max_iters < 1 || !(c.lloyd_conv_tol > 0.0))) {
    config_error("Lloyd iteration limits must be positive");
  }
  const bool mpc = c.mode != RunMode::LloydPeriodic;
  const ConvexPolygon inner = erode(c.arena, c.r_max + c.epsilon);
  if (inner.is_empty()) config_error("arena is too small for R_max + epsilon");

  std::vector<Point> p;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const AgentSpec& a = c.agents[i];
    if (!a.model) config_error(agent_prefix(i) + "no model");
    const AgentModel& mdl = *a.model;
    if (a.initial_state.size() != mdl.state_dim()) config_error(agent_prefix(i) + "initial state has the wrong size");
    Box xs, us;
    try {
      xs = mdl.state_box().shrunk(c.epsilon);
      us = mdl.input_box().shrunk(c.epsilon);
    } catch (const Error& e) {
      config_error(agent_prefix(i) + e.what());
    }
    if (!xs.contains(a.initial_state)) config_error(agent_prefix(i) + "initial state outside the interior state box");
    const auto u = mdl.steady_input(a.initial_state);
    if (!u || !us.contains(*u)) {
      config_error(agent_prefix(i) + "initial state is not a steady state with an interior input");
    }
    p.push_back(mdl.output(a.initial_state));
    if (!contains(inner, p.back())) {
      config_error(agent_prefix(i) + "initial position closer than R_max + epsilon to the arena boundary");
    }
    if (!mpc) continue;
    try {
      a.tracker.validate(mdl.state_dim(), mdl.input_dim());
    } catch (const Error& e) {
      config_error(agent_prefix(i) + e.what());
    }
    const int bound = std::max(n_star(a.tracker), a.tracker.n0);
    if (a.tracker.horizon < bound) {
      std::ostringstream os;
      os << agent_prefix(i) << "horizon N = " << a.tracker.horizon << " is below the bound max(N_0, N*) = " << bound
         << " (N* = " << n_star(a.tracker) << " from alpha2/alpha1 = " << a.tracker.alpha2() / a.tracker.alpha1()
         << ", L_f = " << a.tracker.l_f << ", gamma_bar = " << a.tracker.gamma_bar
         << ", alpha_N = " << a.tracker.alpha_n << ")";
      config_error(os.str());
    }
    if (a.tracker.horizon >= c.horizon) config_error(agent_prefix(i) + "tracking horizon N must be shorter than T");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if ((p[i] - p[j]).norm() < 2.0 * (c.r_max + c.epsilon)) {
        config_error("agents " + std::to_string(i) + " and " + std::to_string(j) +
                     " start closer than 2 (R_max + epsilon)");
      }
    }
  }
}

RunLog run_lloyd_periodic(const FleetConfig& c) {
  validate(c);
  RunLog log = empty_log(c);
  const std::size_t m = c.size();
  const auto horizon = static_cast<std::size_t>(c.horizon);
  std::vector<ReferencePlan> plans(m);
  int iteration = 0;
  try {
    PartitionSequence seq = constant_partition_sequence(initial_positions(c), c.arena, c.r_max, c.epsilon, horizon);
    for (std::size_t i = 0; i < m; ++i) {
      const AgentModel& mdl = *c.agents[i].model;
      plans[i] = plan_periodic(mdl, slice_for_agent(seq, i), c.density, 0,
                               steady_trajectory(mdl, c.agents[i].initial_state, horizon, TrajectoryTag::Periodic),
                               c.planner);
    }
    for (iteration = 1; iteration <= c.lloyd_max_iters; ++iteration) {
      std::vector<std::vector<Point>> by_time(horizon, std::vector<Point>(m));
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < horizon; ++k) by_time[k][i] = plans[i].positions[k];
      }
      seq = build_partition_sequence(by_time, c.arena, c.r_max, c.epsilon);
      double cost = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        cost += horizon_cost(c.density, plans[i].positions, slice_for_agent(seq, i).cells, 0, c.planner.quadrature)
                    .integral;
      }
      log.lloyd_costs.push_back(cost);
      log.lloyd_iterations = iteration;
      const std::size_t n = log.lloyd_costs.size();
      if (n >= 2 && log.lloyd_costs[n - 2] - cost < c.lloyd_conv_tol) {
        log.converged = true;
        break;
      }
      for (std::size_t i = 0; i < m; ++i) {
        plans[i] = plan_periodic(*c.agents[i].model, slice_for_agent(seq, i), c.density, 0, plans[i].trajectory,
                                 c.planner);
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PlannerInfeasible) throw;
    log.aborted = true;
    log.abort_code = e.code();
    log.abort_step = iteration;
    log.abort_reason = "iteration " + std::to_string(iteration) + ": " + e.what();
  }
  log.final_plans = plans;
  return log;
}

RunLog run_periodic_mpc(const FleetConfig& config) { return MpcRunner(config, true).run(); }

RunLog run_nonperiodic_mpc(const FleetConfig& config) { return MpcRunner(config, false).run(); }

RunLog run(const FleetConfig& config) {
  switch (config.mode) {
    case RunMode::LloydPeriodic: return run_lloyd_periodic(config);
    case RunMode::PeriodicMpc: return run_periodic_mpc(config);
    case RunMode::NonperiodicMpc: return run_nonperiodic_mpc(config);
  }
  return run_periodic_mpc(config);
}

}  // namespace tvcov
