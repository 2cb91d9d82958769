#include "tvcov/experiment_config.hpp"

#include <Eigen/Dense>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "toml_lite.hpp"

namespace tvcov {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorCode::ConfigError, msg); }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

Box make_box(const std::vector<double>& lo, const std::vector<double>& hi, const std::string& what) {
  if (lo.size() != hi.size() || lo.empty()) config_error(what + " bounds must be nonempty and of equal length");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] <= hi[j])) config_error(what + " lower bound exceeds upper bound");
  }
  return Box{to_vec(lo), to_vec(hi)};
}

// Typed access to one JSON object that rejects unknown keys and values of
// the wrong kind.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) config_error(where_ + " must be a table");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    const json& v = obj_.at(key);
    try {
      check_kind<T>(v, key);
      out = v.get<T>();
    } catch (const json::exception& e) {
      config_error(where_ + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    if (!obj_.contains(key)) return nullptr;
    used_.insert(key);
    return &obj_.at(key);
  }

  void finish() const {
    for (const auto& [key, v] : obj_.items()) {
      if (!used_.count(key)) config_error("unknown key '" + where_ + key + "'");
    }
  }

 private:
  template <class T>
  void check_kind(const json& v, const char* key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) config_error(where_ + key + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) config_error(where_ + key + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          config_error(where_ + key + " must be nonnegative");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) config_error(where_ + key + " must be a number");
    }
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

json model_json(const ModelSpec& m) {
  return {{"type", m.type},
          {"dt", m.dt},
          {"state_lower", m.state_lower},
          {"state_upper", m.state_upper},
          {"input_lower", m.input_lower},
          {"input_upper", m.input_upper},
          {"l_rear", m.l_rear},
          {"l_front", m.l_front}};
}

json density_json(const DensitySpec& d) {
  json wps = json::array();
  for (const WaypointSpec& w : d.waypoints) wps.push_back({w.t, w.x, w.y});
  return {{"type", d.type},     {"value", d.value},   {"sigma", d.sigma},       {"center", d.center},
          {"radius", d.radius}, {"period", d.period}, {"phase", d.phase}, {"waypoints", wps}};
}

json tracker_json(const TrackerSpec& t) {
  return {{"q_diag", t.q_diag}, {"r_diag", t.r_diag}, {"gamma_bar", t.gamma_bar}, {"alpha_n", t.alpha_n},
          {"v_max", t.v_max},   {"l_v", t.l_v},       {"l_f", t.l_f},             {"horizon", t.horizon},
          {"n0", t.n0}};
}

json config_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"mode", std::string(to_string(c.mode))},
          {"horizon", c.horizon},
          {"k_interval", c.k_interval},
          {"r_max", c.r_max},
          {"epsilon", c.epsilon},
          {"seed", c.seed},
          {"max_steps", c.max_steps},
          {"lloyd_max_iters", c.lloyd_max_iters},
          {"lloyd_conv_tol", c.lloyd_conv_tol},
          {"pin_reference", c.pin_reference},
          {"arena", c.arena},
          {"initial_states", c.initial_states},
          {"initial_jitter", c.initial_jitter},
          {"output_dir", c.output_dir},
          {"plots", c.plots},
          {"model", model_json(c.model)},
          {"density", density_json(c.density)},
          {"tracker", tracker_json(c.tracker)}};
}

void read_model(const json& j, ModelSpec& m) {
  Reader r(j, "model.");
  r.get("type", m.type);
  r.get("dt", m.dt);
  r.get("state_lower", m.state_lower);
  r.get("state_upper", m.state_upper);
  r.get("input_lower", m.input_lower);
  r.get("input_upper", m.input_upper);
  r.get("l_rear", m.l_rear);
  r.get("l_front", m.l_front);
  r.finish();
}

void read_density(const json& j, DensitySpec& d) {
  Reader r(j, "density.");
  r.get("type", d.type);
  r.get("value", d.value);
  r.get("sigma", d.sigma);
  r.get("center", d.center);
  r.get("radius", d.radius);
  r.get("period", d.period);
  r.get("phase", d.phase);
  if (const json* wps = r.child("waypoints")) {
    if (!wps->is_array()) config_error("density.waypoints must be an array of [t, x, y]");
    d.waypoints.clear();
    for (const json& w : *wps) {
      if (!w.is_array() || w.size() != 3 || !w[0].is_number() || !w[1].is_number() || !w[2].is_number()) {
        config_error("density.waypoints entries must be [t, x, y]");
      }
      d.waypoints.push_back({w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
    }
  }
  r.finish();
}

void read_tracker(const json& j, TrackerSpec& t) {
  Reader r(j, "tracker.");
  r.get("q_diag", t.q_diag);
  r.get("r_diag", t.r_diag);
  r.get("gamma_bar", t.gamma_bar);
  r.get("alpha_n", t.alpha_n);
  r.get("v_max", t.v_max);
  r.get("l_v", t.l_v);
  r.get("l_f", t.l_f);
  r.get("horizon", t.horizon);
  r.get("n0", t.n0);
  r.finish();
}

ExperimentConfig config_from_document(const json& doc) {
  ExperimentConfig c;
  Reader r(doc, "");
  r.get("name", c.name);
  std::string mode(to_string(c.mode));
  r.get("mode", mode);
  c.mode = run_mode_from_string(mode);
  r.get("horizon", c.horizon);
  r.get("k_interval", c.k_interval);
  r.get("r_max", c.r_max);
  r.get("epsilon", c.epsilon);
  r.get("seed", c.seed);
  r.get("max_steps", c.max_steps);
  r.get("lloyd_max_iters", c.lloyd_max_iters);
  r.get("lloyd_conv_tol", c.lloyd_conv_tol);
  r.get("pin_reference", c.pin_reference);
  r.get("arena", c.arena);
  r.get("initial_states", c.initial_states);
  r.get("initial_jitter", c.initial_jitter);
  r.get("output_dir", c.output_dir);
  r.get("plots", c.plots);
  if (const json* m = r.child("model")) read_model(*m, c.model);
  if (const json* d = r.child("density")) read_density(*d, c.density);
  if (const json* t = r.child("tracker")) read_tracker(*t, c.tracker);
  r.finish();
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ModelPtr ModelSpec::build() const {
  if (!(dt > 0.0)) config_error("model.dt must be positive");
  const Box xs = make_box(state_lower, state_upper, "model state");
  const Box us = make_box(input_lower, input_upper, "model input");
  if (type == "single_integrator") {
    if (xs.lower.size() != 2 || us.lower.size() != 2) config_error("single_integrator needs 2-d state and input boxes");
    return std::make_shared<SingleIntegrator2D>(dt, xs, us);
  }
  if (type == "kinematic_bicycle") {
    if (xs.lower.size() != 4 || us.lower.size() != 2) {
      config_error("kinematic_bicycle needs a 4-d state box and a 2-d input box");
    }
    return std::make_shared<KinematicBicycle>(dt, xs, us, l_rear, l_front);
  }
  config_error("unknown model type '" + type + "'");
}

DensityField DensitySpec::build() const {
  if (type == "uniform") return DensityField::uniform(value);
  if (center.size() != 2) config_error("density.center must have two entries");
  const Point c(center[0], center[1]);
  if (type == "gaussian_static") return DensityField::gaussian_static(sigma, c);
  if (type == "gaussian_circle") return DensityField::gaussian_circle(sigma, c, radius, period, phase);
  if (type == "gaussian_waypoints") {
    std::vector<Waypoint> wps;
    for (const WaypointSpec& w : waypoints) wps.push_back({w.t, Point(w.x, w.y)});
    return DensityField::gaussian_waypoints(sigma, std::move(wps));
  }
  config_error("unknown density type '" + type + "'");
}

TrackerConstants TrackerSpec::build(long k_interval) const {
  TrackerConstants c;
  c.q = to_vec(q_diag).asDiagonal();
  c.r = to_vec(r_diag).asDiagonal();
  c.gamma_bar = gamma_bar;
  c.alpha_n = alpha_n;
  c.v_max = v_max;
  c.l_v = l_v;
  c.l_f = l_f;
  c.horizon = horizon;
  c.k_interval = k_interval;
  c.n0 = n0;
  return c;
}

FleetConfig ExperimentConfig::to_fleet() const {
  try {
    return build_fleet();
  } catch (const Error& e) {
    // Domain errors from the model and density factories are config errors here.
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
}

FleetConfig ExperimentConfig::build_fleet() const {
  if (arena.size() != 4 || !(arena[0] < arena[1]) || !(arena[2] < arena[3])) {
    config_error("arena must be [xmin, xmax, ymin, ymax] with xmin < xmax and ymin < ymax");
  }
  if (!(initial_jitter >= 0.0)) config_error("initial_jitter must be nonnegative");
  FleetConfig f;
  f.arena = ConvexPolygon::box(arena[0], arena[1], arena[2], arena[3]);
  f.density = density.build();
  f.horizon = horizon;
  f.k_interval = k_interval;
  f.r_max = r_max;
  f.epsilon = epsilon;
  f.mode = mode;
  f.seed = seed;
  f.max_steps = max_steps;
  f.lloyd_max_iters = lloyd_max_iters;
  f.lloyd_conv_tol = lloyd_conv_tol;
  f.pin_reference = pin_reference;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-initial_jitter, initial_jitter);
  for (std::size_t i = 0; i < initial_states.size(); ++i) {
    AgentSpec a;
    a.model = model.build();
    a.tracker = tracker.build(k_interval);
    a.initial_state = to_vec(initial_states[i]);
    if (a.initial_state.size() != a.model->state_dim()) {
      config_error("initial_states[" + std::to_string(i) + "] must have " + std::to_string(a.model->state_dim()) +
                   " entries");
    }
    if (initial_jitter > 0.0) {
      const Eigen::Vector2d d(offset(rng), offset(rng));
      a.initial_state += a.model->output_matrix().completeOrthogonalDecomposition().solve(d);
    }
    f.agents.push_back(std::move(a));
  }
  return f;
}

void validate(const ExperimentConfig& config) { validate(config.to_fleet()); }

std::string to_json(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string to_toml(const ExperimentConfig& config) { return toml_lite::dump(config_json(config)); }

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("json: ") + e.what());
  }
  return config_from_document(doc);
}

ExperimentConfig config_from_toml(const std::string& text) { return config_from_document(toml_lite::parse(text)); }

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ExperimentConfig c = path.extension() == ".json" ? config_from_json(text) : config_from_toml(text);
  validate(c);
  return c;
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) config_error("cannot write config file " + path.string());
  out << (path.extension() == ".json" ? to_json(config) : to_toml(config));
}

}  // namespace tvcov
