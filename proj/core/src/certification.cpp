#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "tvcov/errors.hpp"
#include "tvcov/planner.hpp"
#include "tvcov/tracker.hpp"

namespace tvcov {

namespace {

constexpr double kSlack = 1e-9;
constexpr int kMaxDraws = 200;

Vec uniform_in(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec v(lo.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = lo(j) + unit(rng) * (hi(j) - lo(j));
  return v;
}

/// Rollout of random inputs from the middle of the state box that stays in
/// the box shrunk by `margin`.
Trajectory random_reference(const AgentModel& model, int length, double margin, std::mt19937_64& rng) {
  const Box xs = model.state_box().shrunk(margin);
  const Box us = model.input_box().shrunk(margin);
  const Vec xc = xs.center(), xw = 0.25 * (xs.upper - xs.lower);
  const Vec uc = us.center(), uw = 0.5 * (us.upper - us.lower);
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    // Later draws use gentler inputs so narrow boxes still admit a reference.
    const double scale = 1.0 / (1.0 + draw / 10);
    Trajectory ref;
    ref.states.push_back(uniform_in(rng, xc - xw, xc + xw));
    bool ok = true;
    for (int k = 0; k < length && ok; ++k) {
      const Vec u = uniform_in(rng, uc - scale * uw, uc + scale * uw);
      ref.inputs.push_back(u);
      ref.states.push_back(model.step(ref.states.back(), u));
      ok = xs.contains(ref.states.back());
    }
    if (ok) return ref;
  }
  fail(ErrorCode::CertificationFailed, "could not draw a reference inside the state box");
}

}  // namespace

TrackerConstants estimate_tracking_constants(const AgentModel& model, const TrackerConstants& partial,
                                             int trials, std::uint64_t seed, CertificationReport* report,
                                             int steps_per_trial, double reference_margin) {
  if (trials < 1) fail(ErrorCode::DomainError, "need at least one certification trial");
  if (steps_per_trial < 1) fail(ErrorCode::DomainError, "need at least one closed-loop step per trial");
  if (!(reference_margin >= 0.0)) fail(ErrorCode::DomainError, "reference margin must be nonnegative");
  partial.validate(model.state_dim(), model.input_dim());

  const int n = partial.horizon;
  const double decay = partial.decay();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Certification looks at the dynamics and boxes only; position cells are
  // replaced by one cell large enough never to bind.
  const std::vector<ConvexPolygon> free_cells(static_cast<std::size_t>(n),
                                              ConvexPolygon::box(-1e6, 1e6, -1e6, 1e6));

  CertificationReport rep;
  // First witness of each kind of failure.
  std::map<std::string, std::string> witnesses;
  auto flag = [&](int trial, int step, const std::string& what, double ratio, double bound) {
    if (witnesses.count(what)) return;
    std::ostringstream os;
    os << "trial " << trial << " step " << step << ": " << what << " = " << ratio << " exceeds " << bound;
    witnesses[what] = os.str();
  };

  for (int trial = 0; trial < trials; ++trial) {
    ++rep.trials;
    const Trajectory ref = random_reference(model, steps_per_trial + n + 1, reference_margin, rng);

    // Trial 0 starts on the reference; the others start at a random offset
    // sized so that V <= gamma_bar |e|_Q^2 <= V_max.
    Vec x = ref.states.front();
    if (trial > 0) {
      Vec dir(model.state_dim());
      for (Eigen::Index j = 0; j < dir.size(); ++j) dir(j) = normal(rng);
      const double qn = dir.dot(partial.q * dir);
      if (qn > 0.0) x += dir * std::sqrt(unit(rng) * partial.v_max / partial.gamma_bar / qn);
      x = x.cwiseMax(model.state_box().lower).cwiseMin(model.state_box().upper);
    }

    std::optional<Trajectory> warm;
    double v_prev = -1.0;
    for (int t = 0; t <= steps_per_trial; ++t) {
      const ReferenceSegment seg = reference_segment(ref, t, n);
      const TrackerSolution sol = solve_tracking(model, x, seg, free_cells, partial, warm);
      ++rep.solves;
      const Vec e = x - seg.states.front();
      if (t == 0) {
        const double qe = e.dot(partial.q * e);
        if (sol.value > kSlack) {
          const double ratio = qe > 0.0 ? sol.value / qe : std::numeric_limits<double>::infinity();
          rep.worst_gamma = std::max(rep.worst_gamma, ratio);
          if (sol.value > partial.gamma_bar * qe + kSlack) flag(trial, t, "V_0/|e|_Q^2", ratio, partial.gamma_bar);
        }
        // Perturbed references probe the Lipschitz bound in the reference.
        ReferenceSegment pert = seg;
        double dist2 = 0.0;
        for (int k = 0; k <= n; ++k) {
          for (Eigen::Index j = 0; j < pert.states[k].size(); ++j) {
            const double d = 1e-2 * normal(rng);
            pert.states[k](j) += d;
            dist2 += d * d;
          }
          for (Eigen::Index j = 0; j < pert.inputs[k].size(); ++j) {
            const double d = 1e-2 * normal(rng);
            pert.inputs[k](j) += d;
            dist2 += d * d;
          }
        }
        const TrackerSolution ps = solve_tracking(model, x, pert, free_cells, partial);
        ++rep.solves;
        const double lv = (ps.value - sol.value) / std::sqrt(dist2);
        rep.worst_lv = std::max(rep.worst_lv, lv);
        if (ps.value > sol.value + partial.l_v * std::sqrt(dist2) + kSlack) flag(trial, t, "dV/|dr|", lv, partial.l_v);
      } else if (v_prev > kSlack || sol.value > kSlack) {
        const double ratio = v_prev > 0.0 ? sol.value / v_prev : std::numeric_limits<double>::infinity();
        rep.worst_decay = std::max(rep.worst_decay, ratio);
        if (sol.value > decay * v_prev + kSlack) flag(trial, t, "V_{t+1}/V_t", ratio, decay);
      }
      v_prev = sol.value;
      x = closed_loop_step(model, x, sol);
      // Shifted optimal trajectory as the next warm start.
      Trajectory w;
      w.states.assign(sol.trajectory.states.begin() + 1, sol.trajectory.states.end());
      w.inputs.assign(sol.trajectory.inputs.begin() + 1, sol.trajectory.inputs.end());
      w.inputs.push_back(seg.inputs.back());
      w.states.push_back(model.step(w.states.back(), w.inputs.back()));
      w.states.front() = x;
      warm = w;
    }
  }
  if (report) *report = rep;
  if (!witnesses.empty()) {
    std::string msg;
    for (const auto& [kind, text] : witnesses) msg += (msg.empty() ? "" : "; ") + text;
    fail(ErrorCode::CertificationFailed, msg);
  }
  return partial;
}

}  // namespace tvcov
