#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvcov/density.hpp"
#include "tvcov/dynamics.hpp"
#include "tvcov/errors.hpp"
#include "tvcov/geometry.hpp"
#include "tvcov/planner.hpp"
#include "tvcov/tracker.hpp"

namespace tvcov {

enum class RunMode { LloydPeriodic, PeriodicMpc, NonperiodicMpc };

std::string_view to_string(RunMode mode);
/// Accepts "lloyd_periodic", "periodic_mpc" and "nonperiodic_mpc".
RunMode run_mode_from_string(std::string_view text);

struct AgentSpec {
  ModelPtr model;
  TrackerConstants tracker;
  Vec initial_state;
};

/// Forces an agent's candidate out of its cells before the vote of one
/// planning round (round j happens at t = j K). Test hook.
struct CandidateFault {
  int agent = 0;
  long round = 0;
};

struct FleetConfig {
  std::vector<AgentSpec> agents;
  ConvexPolygon arena = ConvexPolygon::box(-2, 2, -2, 2);
  DensityField density = DensityField::uniform();
  long horizon = 20;     ///< T
  long k_interval = 5;   ///< K
  double r_max = 0.055;
  double epsilon = 0.005;
  RunMode mode = RunMode::PeriodicMpc;
  std::uint64_t seed = 0;
  long max_steps = 1000;

  int lloyd_max_iters = 200;
  double lloyd_conv_tol = 1e-6;

  /// Plan once at t = 0, then replace every planner update by the shifted
  /// previous plan.
  bool pin_reference = false;
  std::vector<CandidateFault> faults;

  PlannerOptions planner;
  TrackerOptions tracker;

  std::size_t size() const { return agents.size(); }
};

/// Throws ConfigError (TooFewAgents for an empty fleet) when the fleet does
/// not meet the start conditions: steady initial states in the interior
/// boxes, positions at least R_max + eps inside the arena and 2 (R_max + eps)
/// apart, and for the MPC modes N >= max(N_0, N*) and N < T.
void validate(const FleetConfig& config);

struct StepRecord {
  long t = 0;
  std::vector<Point> positions;
  std::vector<double> values;        ///< tracker value per agent
  std::vector<double> stage_costs;   ///< first stage cost per agent
  std::vector<double> ref_distance;  ///< |p - p_ref| per agent
  double coverage_cost = 0.0;        ///< locational cost over the Voronoi cells of the positions
  double min_distance = 0.0;         ///< smallest pairwise distance, +inf for one agent
  bool swapped = false;              ///< partitions were swapped at this step
  bool in_own_cells = true;          ///< every position inside its own eroded cell
};

struct RoundRecord {
  long t = 0;
  std::vector<bool> votes;             ///< empty at t = 0
  bool swapped = false;
  std::vector<double> values;          ///< tracker value right after the reference switch
  std::vector<double> budgets;         ///< coupling budget used for the next plan
  std::vector<bool> kept_candidate;    ///< planner returned the shifted plan
};

struct RunLog {
  RunMode mode = RunMode::PeriodicMpc;
  std::uint64_t seed = 0;
  long horizon = 0;
  long k_interval = 0;
  std::size_t agents = 0;

  std::vector<StepRecord> steps;
  std::vector<RoundRecord> rounds;

  std::vector<double> lloyd_costs;  ///< J(p, Vor(p)) per iteration
  int lloyd_iterations = 0;
  bool converged = false;

  std::vector<ReferencePlan> final_plans;

  bool aborted = false;
  std::optional<ErrorCode> abort_code;
  std::string abort_reason;
  long abort_step = -1;

  long first_swap_step() const;
  std::size_t swap_count() const;
};

/// Offline optimal periodic coverage: alternate partitioning and per-agent
/// periodic planning until the cost drops by less than lloyd_conv_tol.
RunLog run_lloyd_periodic(const FleetConfig& config);

/// Closed-loop multi-rate scheme with periodic references: tracking every
/// step, coupled planning, broadcast and a unanimous partition vote every K.
RunLog run_periodic_mpc(const FleetConfig& config);

/// As run_periodic_mpc with steady-state terminated references.
RunLog run_nonperiodic_mpc(const FleetConfig& config);

/// Dispatches on config.mode.
RunLog run(const FleetConfig& config);

}  // namespace tvcov
