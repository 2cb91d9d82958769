#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tvcov/experiment_config.hpp"

namespace tvcov {

/// Built-in experiments.
///
/// Hardware scale (four kinematic bicycles, 33 ms sampling, N = 20):
///   periodic_circle   periodic MPC, T = 150, K = 190, circling Gaussian
///   nonperiodic_k30   nonperiodic MPC, T = 100, K = 30, Gaussian on a waypoint path
///   nonperiodic_k60   as nonperiodic_k30 with K = 60
///
/// Desk scale (four single integrators, 0.1 s sampling, T = 20, K = 5, N = 10):
///   periodic_circle_desk        periodic MPC, circling Gaussian
///   nonperiodic_circle_desk     nonperiodic MPC on the same periodic density
///   nonperiodic_waypoints_desk  nonperiodic MPC, Gaussian on a waypoint path
///   lloyd_desk                  offline periodic Lloyd iteration, circling Gaussian
std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
ExperimentConfig preset(std::string_view name);

}  // namespace tvcov
