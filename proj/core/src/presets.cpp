#include "tvcov/presets.hpp"

namespace tvcov {

namespace {

ExperimentConfig hardware_base() {
  ExperimentConfig c;
  c.arena = {-2.0, 2.0, -2.0, 2.0};
  c.r_max = 0.055;
  c.epsilon = 0.005;
  c.model.type = "kinematic_bicycle";
  c.model.dt = 0.033;
  // Heading is unconstrained in practice; speed may reverse slowly.
  c.model.state_lower = {-2.0, -2.0, -1e3, -0.5};
  c.model.state_upper = {2.0, 2.0, 1e3, 2.0};
  c.model.input_lower = {-0.7, -2.0};
  c.model.input_upper = {0.7, 2.0};
  c.model.l_rear = 0.05;
  c.model.l_front = 0.05;
  c.tracker.q_diag = {180.0, 180.0, 1.0, 1.0};
  c.tracker.r_diag = {0.1, 0.1};
  c.tracker.gamma_bar = 1.2;
  c.tracker.alpha_n = 0.06;  // decay 1 - alpha_n / gamma_bar = 0.95
  c.tracker.v_max = 70.0;
  c.tracker.l_v = 180.0;
  c.tracker.l_f = 1.26;  // sampled state Lipschitz constant of the bicycle step
  c.tracker.horizon = 20;
  c.initial_states = {{0.5, 0.5, 0.0, 0.0}, {-0.5, 0.5, 0.0, 0.0}, {-0.5, -0.5, 0.0, 0.0}, {0.5, -0.5, 0.0, 0.0}};
  c.initial_jitter = 0.02;
  c.density.sigma = 0.5;
  return c;
}

ExperimentConfig desk_base() {
  ExperimentConfig c;
  c.arena = {-2.0, 2.0, -2.0, 2.0};
  c.r_max = 0.055;
  c.epsilon = 0.005;
  c.horizon = 20;
  c.k_interval = 5;
  c.max_steps = 1000;
  c.model.type = "single_integrator";
  c.model.dt = 0.1;
  c.model.state_lower = {-2.0, -2.0};
  c.model.state_upper = {2.0, 2.0};
  c.model.input_lower = {-1.0, -1.0};
  c.model.input_upper = {1.0, 1.0};
  c.tracker.q_diag = {180.0, 180.0};
  c.tracker.r_diag = {0.1, 0.1};
  c.tracker.gamma_bar = 5.0;
  c.tracker.alpha_n = 0.25;  // decay 0.95
  c.tracker.v_max = 70.0;
  c.tracker.l_v = 180.0;
  c.tracker.l_f = 1.0;
  c.tracker.horizon = 10;
  c.initial_states = {{0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}, {0.5, -0.5}};
  c.initial_jitter = 0.05;
  return c;
}

void circle_density(ExperimentConfig& c, double sigma, long period) {
  c.density.type = "gaussian_circle";
  c.density.sigma = sigma;
  c.density.center = {0.0, 0.0};
  c.density.radius = 0.9;
  c.density.period = period;
  c.density.phase = 0.0;
}

// A closed tour through the arena, `span` steps per leg.
void waypoint_density(ExperimentConfig& c, double sigma, double span) {
  c.density.type = "gaussian_waypoints";
  c.density.sigma = sigma;
  const double pts[][2] = {{0.9, 0.0}, {-0.8, 0.6}, {-0.5, -0.9}, {0.8, -0.5}, {0.2, 0.9}, {-0.9, -0.2}, {0.9, 0.0}};
  c.density.waypoints.clear();
  for (std::size_t k = 0; k < std::size(pts); ++k) {
    c.density.waypoints.push_back({span * static_cast<double>(k), pts[k][0], pts[k][1]});
  }
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"periodic_circle",      "nonperiodic_k30",         "nonperiodic_k60",           "periodic_circle_desk",
          "nonperiodic_circle_desk", "nonperiodic_waypoints_desk", "lloyd_desk"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "periodic_circle") {
    c = hardware_base();
    c.mode = RunMode::PeriodicMpc;
    c.horizon = 150;
    c.k_interval = 190;
    c.max_steps = 3000;
    circle_density(c, 0.5, 150);  // 4.95 s at 33 ms
  } else if (name == "nonperiodic_k30" || name == "nonperiodic_k60") {
    c = hardware_base();
    c.mode = RunMode::NonperiodicMpc;
    c.horizon = 100;
    c.k_interval = name == "nonperiodic_k30" ? 30 : 60;
    c.max_steps = 3000;
    waypoint_density(c, 0.5, 450.0);
  } else if (name == "periodic_circle_desk" || name == "nonperiodic_circle_desk" || name == "lloyd_desk") {
    c = desk_base();
    c.mode = name == "periodic_circle_desk"      ? RunMode::PeriodicMpc
             : name == "nonperiodic_circle_desk" ? RunMode::NonperiodicMpc
                                                 : RunMode::LloydPeriodic;
    circle_density(c, 0.4, 20);
  } else if (name == "nonperiodic_waypoints_desk") {
    c = desk_base();
    c.mode = RunMode::NonperiodicMpc;
    waypoint_density(c, 0.4, 150.0);
  } else {
    fail(ErrorCode::ConfigError, "unknown preset '" + std::string(name) + "'");
  }
  c.name = std::string(name);
  c.output_dir = "out/" + c.name;
  return c;
}

}  // namespace tvcov
