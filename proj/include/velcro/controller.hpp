#pragma once

// Peeling controllers and the episode loop around them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "velcro/angles.hpp"
#include "velcro/cost.hpp"
#include "velcro/filter.hpp"
#include "velcro/simulator.hpp"

namespace velcro {

struct ControllerConfig {
  double peel_step = 1.0;  // cm of tip travel per peel
  double angle_deadband = deg_to_rad(1.0);
  double explore_rotation = -kPi / 4.0;
  int max_steps = 500;  // actions
  /// Shrinks the exploratory rotation so the peel angle stays at or above
  /// explore_min_angle even if theta sits at the given quantile of the
  /// particle spread on the unsafe side.
  bool clamp_explore = true;
  double explore_min_angle = deg_to_rad(30.0);
  double explore_clamp_quantile = 0.9;
  /// Particles kept per trajectory record; 0 disables snapshots.
  int snapshot_particles = 0;
};

struct EpisodeConfig {
  SimConfig sim;
  FilterConfig filter;
  ControllerConfig controller;
  CostConfig cost;
};

enum class ControllerKind { FullObs, Heuristic };

inline std::string_view to_string(ControllerKind k) {
  return k == ControllerKind::FullObs ? "full_obs" : "heuristic";
}

inline ControllerKind parse_controller(std::string_view s) {
  if (s == "full_obs" || s == "FullObs" || s == "full-obs") return ControllerKind::FullObs;
  if (s == "heuristic" || s == "Heuristic" || s == "ours") return ControllerKind::Heuristic;
  throw ConfigError("unknown controller: " + std::string(s));
}

struct TrajectoryRecord {
  int step = 0;
  Action action;
  VelcroState truth;   // after the action
  Point2 effector = Point2::Zero();
  Observation obs;
  std::optional<VelcroState> estimate;
  std::optional<double> health;
  double cost = 0.0;
  Event event = Event::Ok;
  std::vector<VelcroState> particles;
};

enum class UpdateKind { F1, F2, F3 };

/// Optional instrumentation. on_update sees the ensemble before and after
/// every measurement update.
struct EpisodeHooks {
  std::function<void(UpdateKind, const ParticleSet&, const ParticleSet&)> on_update;
};

/// Mutable state of one running episode.
struct EpisodeContext {
  EpisodeContext(WorldState w, const EpisodeConfig& c, std::uint64_t seed,
                 EpisodeHooks h = {})
      : world(std::move(w)), cfg(c), rng(seed), hooks(std::move(h)) {}

  WorldState world;
  const EpisodeConfig& cfg;
  Rng rng;
  EpisodeHooks hooks;
  EpisodeMetrics metrics;
  std::vector<TrajectoryRecord> records;
  bool done = false;

  void finish(Event e) {
    done = true;
    metrics.terminal_event = e;
    metrics.success = e == Event::FullyPeeled;
  }
};

struct ExecutedAction {
  Action action;
  StepOutcome outcome;
  Observation obs;
  double cost = 0.0;
};

namespace detail {

inline int substeps_for(const Action& a, const SimConfig& sim) {
  if (a.kind == ActionKind::Peel)
    return std::max(1, static_cast<int>(std::ceil(sim.substeps * a.d - 1e-9)));
  return std::max(1, static_cast<int>(std::ceil(sim.substeps * std::abs(a.delta_phi) - 1e-9)));
}

}  // namespace detail

/// Executes one action on the true world, books its cost, observes and logs.
/// Returns nullopt (and ends the episode) when the step budget is exhausted.
inline std::optional<ExecutedAction> execute(EpisodeContext& ctx, const Action& action) {
  if (ctx.done) return std::nullopt;
  if (ctx.metrics.steps >= ctx.cfg.controller.max_steps) {
    ctx.finish(Event::StepLimit);
    return std::nullopt;
  }
  const SimConfig& sim = ctx.cfg.sim;
  const int substeps = detail::substeps_for(action, sim);
  const bool peeling = action.kind == ActionKind::Peel;
  StepOutcome out = peeling ? apply_peel(ctx.world, action.alpha, action.d, substeps, sim)
                            : apply_rotate(ctx.world, action.delta_phi, substeps, sim);
  // Commanded end-effector position; the final peel stops where the strap comes free.
  const Point2 effector =
      peeling && out.event != Event::FullyPeeled
          ? Point2(ctx.world.tip() +
                   action.d * Point2(std::cos(action.alpha), std::sin(action.alpha)))
          : out.state.tip();
  ExecutedAction ex{action, out, {}, action_cost(out, action, ctx.cfg.cost)};
  ctx.world = out.state;
  ex.obs = observe(ctx.world, sim.noise_std_beta, ctx.rng);
  ctx.metrics.total_cost += ex.cost;
  ++ctx.metrics.steps;

  TrajectoryRecord rec;
  rec.step = ctx.metrics.steps - 1;
  rec.action = action;
  rec.truth = ctx.world.velcro_state();
  rec.effector = effector;
  rec.obs = ex.obs;
  rec.cost = ex.cost;
  rec.event = out.event;
  ctx.records.push_back(std::move(rec));

  if (out.event != Event::Ok) ctx.finish(out.event);
  return ex;
}

/// Fully observable baseline: square up the peeled part, then peel along the
/// bisector of the right angle.
inline int full_obs_step(EpisodeContext& ctx) {
  const ControllerConfig& cc = ctx.cfg.controller;
  int executed = 0;
  const double dev = angle_diff(ctx.world.relative_angle(), kHalfPi);
  if (std::abs(dev) > cc.angle_deadband) {
    if (!execute(ctx, Action::rotate(-dev))) return executed;
    ++executed;
    if (ctx.done) return executed;
  }
  if (execute(ctx, Action::peel(ctx.world.theta() + kPi / 4.0, cc.peel_step))) ++executed;
  return executed;
}

struct HeuristicState {
  ParticleSet particles;
  double health = 0.0;
};

struct IterationResult {
  std::vector<Action> actions;
  bool explored = false;
  double health = 0.0;
};

namespace detail {

template <class Update>
void instrumented(EpisodeContext& ctx, UpdateKind kind, ParticleSet& ps, Update update) {
  if (ctx.hooks.on_update) {
    const ParticleSet before = ps;
    update();
    ctx.hooks.on_update(kind, before, ps);
  } else {
    update();
  }
}

inline void annotate_last(EpisodeContext& ctx, const ParticleSet& ps,
                          std::optional<double> health) {
  if (ctx.records.empty()) return;
  TrajectoryRecord& rec = ctx.records.back();
  rec.estimate = estimate(ps, ctx.cfg.filter);
  rec.health = health;
  const int keep = ctx.cfg.controller.snapshot_particles;
  rec.particles.clear();
  if (keep > 0 && !ps.particles.empty()) {
    const std::size_t stride =
        std::max<std::size_t>(1, (ps.size() + keep - 1) / static_cast<std::size_t>(keep));
    for (std::size_t i = 0; i < ps.size(); i += stride) rec.particles.push_back(ps.particles[i]);
  }
}

/// Executes a rotation and runs the F1/F2 updates it enables.
inline bool rotate_and_update(EpisodeContext& ctx, HeuristicState& hs, double delta_phi,
                              IterationResult& result) {
  const Action a = Action::rotate(delta_phi);
  const auto ex = execute(ctx, a);
  if (!ex) return false;
  result.actions.push_back(a);
  ParticleSet& ps = hs.particles;
  const FilterConfig& fc = ctx.cfg.filter;
  predict(ps, a, fc, ctx.rng);
  instrumented(ctx, UpdateKind::F1, ps, [&] { update_f1(ps, ex->obs, fc, ctx.rng); });
  instrumented(ctx, UpdateKind::F2, ps, [&] { update_f2(ps, ex->obs, fc, ctx.rng); });
  annotate_last(ctx, ps, std::nullopt);
  return !ctx.done;
}

}  // namespace detail

/// Rotation used by the exploratory branch. With clamping on, the magnitude
/// shrinks until the peel angle stays inside [explore_min_angle,
/// pi - explore_min_angle] for theta anywhere up to the configured quantile of
/// the particle spread.
inline double explore_rotation(const ParticleSet& ps, const FilterConfig& fc,
                               const ControllerConfig& cc) {
  const double rot = cc.explore_rotation;
  if (!cc.clamp_explore || ps.particles.empty()) return rot;
  const VelcroState est = estimate(ps, fc);
  std::vector<double> dev;
  dev.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps.weights[i] > 0.0) dev.push_back(angle_diff(ps.particles[i].theta, est.theta));
  if (dev.empty()) return rot;
  std::sort(dev.begin(), dev.end());
  const double q = std::clamp(cc.explore_clamp_quantile, 0.5, 1.0);
  const auto at = [&dev](double f) {
    const auto k = static_cast<std::size_t>(f * static_cast<double>(dev.size() - 1) + 0.5);
    return dev[std::min(k, dev.size() - 1)];
  };
  const double rel = angle_diff(est.phi, est.theta);
  if (rot < 0.0) {
    // Smallest peel angle: theta at the upper quantile.
    const double rel_low = rel - at(q);
    return std::min(0.0, std::max(rot, cc.explore_min_angle - rel_low));
  }
  const double rel_high = rel - at(1.0 - q);
  return std::max(0.0, std::min(rot, (kPi - cc.explore_min_angle) - rel_high));
}

/// One iteration of the partially observable controller:
///   1. if the estimated peel angle is off a right angle, rotate back (F1, F2);
///   2. peel along the estimated bisector (F1);
///   3. with probability equal to the health index, rotate to explore
///      (F1, F2), fit the surface direction from the hinge history and apply F3.
inline IterationResult heuristic_step(HeuristicState& hs, EpisodeContext& ctx) {
  IterationResult result;
  ParticleSet& ps = hs.particles;
  const FilterConfig& fc = ctx.cfg.filter;
  const ControllerConfig& cc = ctx.cfg.controller;

  try {
    VelcroState est = estimate(ps, fc);
    const double dev = angle_diff(angle_diff(est.phi, est.theta), kHalfPi);
    if (std::abs(dev) > cc.angle_deadband) {
      if (!detail::rotate_and_update(ctx, hs, -dev, result)) return result;
      est = estimate(ps, fc);
    }

    const Action peel = Action::peel(est.theta + kPi / 4.0, cc.peel_step);
    const auto ex = execute(ctx, peel);
    if (!ex) return result;
    result.actions.push_back(peel);
    predict(ps, peel, fc, ctx.rng, 1.0 + hs.health);
    detail::instrumented(ctx, UpdateKind::F1, ps, [&] { update_f1(ps, ex->obs, fc, ctx.rng); });
    hs.health = health_index(ps);
    result.health = hs.health;
    detail::annotate_last(ctx, ps, hs.health);
    if (ctx.done) return result;

    const double draw = std::uniform_real_distribution<double>(0.0, 1.0)(ctx.rng);
    if (draw < hs.health) {
      result.explored = true;
      const double rot = explore_rotation(ps, fc, cc);
      if (!detail::rotate_and_update(ctx, hs, rot, result)) return result;
      if (const auto fit = fit_theta_aux(ps.hinge_history, fc)) {
        detail::instrumented(ctx, UpdateKind::F3, ps,
                             [&] { update_f3(ps, fit->theta, fc, ctx.rng); });
        detail::annotate_last(ctx, ps, std::nullopt);
      }
    }
  } catch (const FilterDivergence&) {
    ctx.finish(Event::FilterDivergence);
  }
  return result;
}

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<TrajectoryRecord> trajectory;
};

/// Runs one seeded episode from the initial configuration to termination.
inline EpisodeResult run_episode(const SurfaceCurve& curve, ControllerKind kind,
                                 const EpisodeConfig& cfg, std::uint64_t seed,
                                 EpisodeHooks hooks = {}) {
  EpisodeContext ctx(make_world(curve, cfg.sim), cfg, seed, std::move(hooks));
  if (cfg.controller.max_steps <= 0) ctx.finish(Event::StepLimit);

  if (kind == ControllerKind::FullObs) {
    while (!ctx.done) full_obs_step(ctx);
  } else if (!ctx.done) {
    const Observation first = observe(ctx.world, cfg.sim.noise_std_beta, ctx.rng);
    HeuristicState hs{init(first, cfg.filter, ctx.rng), 0.0};
    while (!ctx.done) heuristic_step(hs, ctx);
  }
  return {ctx.metrics, std::move(ctx.records)};
}

}  // namespace velcro
