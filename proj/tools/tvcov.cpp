// Command line front end: runs the coverage schemes from a config file or a
// built-in preset and evaluates the theoretical bounds.
//
// Exit codes: 0 success, 2 configuration error, 3 infeasibility abort.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "tvcov/coordinator.hpp"
#include "tvcov/experiment_config.hpp"
#include "tvcov/presets.hpp"
#include "tvcov/run_output.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct SourceArgs {
  std::string config;
  std::string preset;
};

struct RunArgs {
  SourceArgs source;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::string out;
  bool no_plots = false;
};

struct BoundsArgs {
  SourceArgs source;
  double v_max = 70.0;
  double l_v = 180.0;
  double decay = 0.95;
  long k = 30;
  double weight_ratio = 1.0;
  double l_f = 1.0;
  double gamma_bar = 2.0;
  double alpha_n = 0.5;
  double v_eps = 1.0;
};

void add_source(CLI::App* cmd, SourceArgs& s) {
  auto* cfg = cmd->add_option("--config", s.config, "experiment file (.toml or .json)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", s.preset, "built-in experiment")->excludes(cfg);
}

tvcov::ExperimentConfig load(const SourceArgs& s, const std::string& fallback) {
  if (!s.config.empty()) return tvcov::load_config(s.config);
  tvcov::ExperimentConfig c = tvcov::preset(s.preset.empty() ? fallback : s.preset);
  tvcov::validate(c);
  return c;
}

int run_mode(const RunArgs& a, tvcov::RunMode mode, const std::string& fallback) {
  tvcov::ExperimentConfig c = load(a.source, fallback);
  c.mode = mode;
  if (a.seed) c.seed = *a.seed;
  if (a.steps) c.max_steps = *a.steps;
  if (!a.out.empty()) c.output_dir = a.out;
  if (a.no_plots) c.plots = false;

  const tvcov::FleetConfig fleet = c.to_fleet();
  const tvcov::RunLog log = tvcov::run(fleet);
  const auto files = tvcov::write_run_outputs(log, fleet.arena, c.output_dir, c.plots);

  std::cout << c.name << ": " << to_string(mode) << ", " << fleet.size() << " agents, seed " << c.seed << "\n";
  if (mode == tvcov::RunMode::LloydPeriodic) {
    std::cout << "iterations " << log.lloyd_iterations << (log.converged ? " (converged)" : " (iteration limit)");
    if (!log.lloyd_costs.empty()) std::cout << ", final cost " << log.lloyd_costs.back();
    std::cout << "\n";
  } else {
    std::cout << "steps " << log.steps.size() << ", partition swaps " << log.swap_count() << "\n";
  }
  std::cout << "wrote " << files.written.size() << " files to " << c.output_dir << "\n";
  if (log.aborted) {
    std::cerr << "aborted: " << log.abort_reason << "\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int bounds(const BoundsArgs& a, bool from_config) {
  std::printf("coupling budget C(V) = (V_max - decay^K V) / L_V with V_max = %g, L_V = %g, decay = %g, K = %ld\n",
              a.v_max, a.l_v, a.decay, a.k);
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double v = frac * a.v_max;
    std::printf("  C(%g) = %.5f\n", v, tvcov::coupling_budget(v, a.v_max, a.l_v, a.decay, a.k).value);
  }
  std::printf("horizon bound: N* = %d (raw %.4f) for alpha2/alpha1 = %g, L_f = %g, gamma_bar = %g, alpha_N = %g\n",
              tvcov::n_star(a.weight_ratio, a.l_f, a.gamma_bar, a.alpha_n),
              tvcov::n_star_raw(a.weight_ratio, a.l_f, a.gamma_bar, a.alpha_n), a.weight_ratio, a.l_f, a.gamma_bar,
              a.alpha_n);
  std::printf("update time: tau = %ld steps from V_max = %g to V_eps = %g at decay %g\n",
              tvcov::update_steps(a.v_eps, a.v_max, a.decay), a.v_max, a.v_eps, a.decay);
  if (from_config) {
    const tvcov::ExperimentConfig c = load(a.source, "");
    const tvcov::FleetConfig fleet = c.to_fleet();
    std::vector<tvcov::TrackerConstants> consts;
    std::vector<double> c_norms;
    for (const auto& agent : fleet.agents) {
      consts.push_back(agent.tracker);
      c_norms.push_back(agent.model->output_matrix().norm());
    }
    const tvcov::UpdateBounds ub = tvcov::finite_update_bounds(consts, fleet.epsilon, c_norms);
    std::printf("%s: N* = %d, V_eps = %.6g, tau = %ld, C(V_max) = %.5f\n", c.name.c_str(), tvcov::n_star(consts[0]),
                ub.v_eps, ub.tau,
                tvcov::coupling_budget(consts[0].v_max, consts[0].v_max, consts[0].l_v, consts[0].decay(),
                                       fleet.k_interval)
                    .value);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying coverage control with tracking MPC"};
  app.require_subcommand(1);

  RunArgs lloyd_args, periodic_args, nonperiodic_args;
  struct Mode {
    const char* name;
    const char* help;
    RunArgs* args;
    tvcov::RunMode mode;
    const char* fallback;
  };
  const Mode modes[] = {
      {"lloyd", "offline periodic Lloyd iteration", &lloyd_args, tvcov::RunMode::LloydPeriodic, "lloyd_desk"},
      {"run-periodic", "closed loop with periodic references", &periodic_args, tvcov::RunMode::PeriodicMpc,
       "periodic_circle_desk"},
      {"run-nonperiodic", "closed loop with steady-state terminated references", &nonperiodic_args,
       tvcov::RunMode::NonperiodicMpc, "nonperiodic_waypoints_desk"},
  };
  std::vector<CLI::App*> run_cmds;
  for (const Mode& m : modes) {
    CLI::App* cmd = app.add_subcommand(m.name, m.help);
    add_source(cmd, m.args->source);
    cmd->add_option("--seed", m.args->seed, "seed for the initial position jitter");
    cmd->add_option("--steps", m.args->steps, "closed-loop steps")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", m.args->out, "output directory");
    cmd->add_flag("--no-plots", m.args->no_plots, "skip the SVG figures");
    run_cmds.push_back(cmd);
  }

  BoundsArgs bounds_args;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "evaluate the coupling budget, horizon and update bounds");
  add_source(bounds_cmd, bounds_args.source);
  bounds_cmd->add_option("--v-max", bounds_args.v_max, "region-of-attraction level");
  bounds_cmd->add_option("--l-v", bounds_args.l_v, "Lipschitz constant of V in the reference");
  bounds_cmd->add_option("--decay", bounds_args.decay, "per-step decay 1 - alpha_N / gamma_bar");
  bounds_cmd->add_option("--k", bounds_args.k, "planner interval K");
  bounds_cmd->add_option("--weight-ratio", bounds_args.weight_ratio, "alpha2 / alpha1 of the state weight");
  bounds_cmd->add_option("--l-f", bounds_args.l_f, "Lipschitz constant of the dynamics");
  bounds_cmd->add_option("--gamma-bar", bounds_args.gamma_bar, "value bound constant");
  bounds_cmd->add_option("--alpha-n", bounds_args.alpha_n, "decrease factor");
  bounds_cmd->add_option("--v-eps", bounds_args.v_eps, "update threshold for the tau bound");

  SourceArgs validate_args;
  CLI::App* validate_cmd = app.add_subcommand("validate-config", "check an experiment file or preset");
  add_source(validate_cmd, validate_args);
  bool list_presets = false;
  validate_cmd->add_flag("--list-presets", list_presets, "print the built-in preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    for (std::size_t i = 0; i < run_cmds.size(); ++i) {
      if (run_cmds[i]->parsed()) return run_mode(*modes[i].args, modes[i].mode, modes[i].fallback);
    }
    if (bounds_cmd->parsed()) {
      return bounds(bounds_args, !bounds_args.source.config.empty() || !bounds_args.source.preset.empty());
    }
    if (validate_cmd->parsed() && list_presets) {
      for (const auto& n : tvcov::preset_names()) std::cout << n << "\n";
      return kExitOk;
    }
    if (validate_cmd->parsed()) {
      const tvcov::ExperimentConfig c = load(validate_args, "periodic_circle_desk");
      const tvcov::FleetConfig fleet = c.to_fleet();
      std::cout << "ok: " << c.name << " (" << to_string(c.mode) << ", " << fleet.size() << " agents";
      if (c.mode != tvcov::RunMode::LloydPeriodic) {
        std::cout << ", N = " << c.tracker.horizon << " >= N* = " << tvcov::n_star(fleet.agents[0].tracker);
      }
      std::cout << ")\n";
      return kExitOk;
    }
  } catch (const tvcov::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case tvcov::ErrorCode::PlannerInfeasible:
      case tvcov::ErrorCode::TrackerInfeasible: return kExitInfeasible;
      default: return kExitConfig;
    }
  }
  return kExitConfig;
}
