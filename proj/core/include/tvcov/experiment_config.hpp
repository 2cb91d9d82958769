#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tvcov/coordinator.hpp"

namespace tvcov {

/// Declarative model description; all agents of an experiment share it.
struct ModelSpec {
  std::string type = "single_integrator";  ///< or "kinematic_bicycle"
  double dt = 0.1;
  std::vector<double> state_lower{-2.0, -2.0};
  std::vector<double> state_upper{2.0, 2.0};
  std::vector<double> input_lower{-1.0, -1.0};
  std::vector<double> input_upper{1.0, 1.0};
  double l_rear = 0.05;
  double l_front = 0.05;

  ModelPtr build() const;
  bool operator==(const ModelSpec&) const = default;
};

struct WaypointSpec {
  double t = 0.0;  ///< step index
  double x = 0.0;
  double y = 0.0;
  bool operator==(const WaypointSpec&) const = default;
};

/// Declarative density description.
struct DensitySpec {
  std::string type = "uniform";  ///< uniform, gaussian_static, gaussian_circle, gaussian_waypoints
  double value = 1.0;            ///< uniform level
  double sigma = 0.4;
  std::vector<double> center{0.0, 0.0};  ///< circle centre or static mean
  double radius = 0.9;
  long period = 20;  ///< steps per revolution
  double phase = 0.0;
  std::vector<WaypointSpec> waypoints;

  DensityField build() const;
  bool operator==(const DensitySpec&) const = default;
};

/// Tracking constants shared by all agents. Weights are diagonal.
struct TrackerSpec {
  std::vector<double> q_diag{180.0, 180.0};
  std::vector<double> r_diag{0.1, 0.1};
  double gamma_bar = 5.0;
  double alpha_n = 0.25;
  double v_max = 70.0;
  double l_v = 180.0;
  double l_f = 1.0;
  int horizon = 10;
  int n0 = 0;

  TrackerConstants build(long k_interval) const;
  bool operator==(const TrackerSpec&) const = default;
};

/// Everything needed to reproduce a run: the fleet, its environment and
/// where results go.
struct ExperimentConfig {
  std::string name = "custom";
  RunMode mode = RunMode::PeriodicMpc;
  long horizon = 20;    ///< T
  long k_interval = 5;  ///< K
  double r_max = 0.055;
  double epsilon = 0.005;
  std::uint64_t seed = 0;
  long max_steps = 1000;
  int lloyd_max_iters = 200;
  double lloyd_conv_tol = 1e-6;
  bool pin_reference = false;

  std::vector<double> arena{-2.0, 2.0, -2.0, 2.0};  ///< xmin, xmax, ymin, ymax
  DensitySpec density;
  ModelSpec model;
  TrackerSpec tracker;
  std::vector<std::vector<double>> initial_states;
  /// Seeded uniform offset of every initial position, in [-jitter, jitter]^2.
  double initial_jitter = 0.0;

  std::string output_dir = "out";
  bool plots = true;

  /// Builds the fleet, applying the seeded initial jitter. Throws ConfigError
  /// on malformed fields.
  FleetConfig to_fleet() const;
  bool operator==(const ExperimentConfig&) const = default;

 private:
  FleetConfig build_fleet() const;
};

/// to_fleet() followed by validate(): rejects short tracking horizons with
/// the bound in the message.
void validate(const ExperimentConfig& config);

std::string to_json(const ExperimentConfig& config);
std::string to_toml(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are errors.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_toml(const std::string& text);

/// Reads a `.json` or `.toml` file (by extension) and validates it.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes JSON for a `.json` path and TOML otherwise.
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace tvcov
