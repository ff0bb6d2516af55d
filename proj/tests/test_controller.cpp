#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "velcro/controller.hpp"

using namespace velcro;

namespace {

EpisodeConfig noiseless() {
  EpisodeConfig cfg;
  cfg.sim.noise_std_beta = 0.0;
  return cfg;
}

HeuristicState exact_belief(const WorldState& w, int n = 50) {
  ParticleSet ps;
  ps.particles.assign(n, w.velcro_state());
  ps.weights.assign(n, 1.0);
  ps.viable.assign(n, 1);
  ps.hinge_history.push_back({w.hinge(), 0});
  return {ps, 0.0};
}

}  // namespace

TEST(FullObs, FlatCostsFifty) {
  const EpisodeConfig cfg;
  const EpisodeResult res =
      run_episode(SurfaceCurve(FlatSurface{0.0}, 50.0), ControllerKind::FullObs, cfg, 1);
  EXPECT_TRUE(res.metrics.success);
  EXPECT_EQ(res.metrics.terminal_event, Event::FullyPeeled);
  EXPECT_NEAR(res.metrics.total_cost, 50.0, 1e-9);
  for (const auto& r : res.trajectory) EXPECT_EQ(r.action.kind, ActionKind::Peel);
  EXPECT_GE(res.trajectory.size(), 51u);
  EXPECT_EQ(res.trajectory.back().truth.r, 60.0);
}

TEST(FullObs, FlatTiltedKeepsRightAngle) {
  const EpisodeConfig cfg;
  for (double tilt : {-55.0, -20.0, 35.0, 60.0}) {
    const EpisodeResult res = run_episode(SurfaceCurve(FlatSurface{deg_to_rad(tilt)}, 50.0),
                                          ControllerKind::FullObs, cfg, 1);
    ASSERT_TRUE(res.metrics.success) << tilt;
    int rotations = 0;
    for (const auto& r : res.trajectory) {
      if (r.action.kind == ActionKind::Rotate) {
        ++rotations;
        continue;
      }
      EXPECT_NEAR(angle_diff(r.truth.phi - r.truth.theta, kHalfPi), 0.0, 1e-9);
    }
    EXPECT_EQ(rotations, 1);
    const double turn = std::abs(deg_to_rad(tilt));
    EXPECT_NEAR(res.metrics.total_cost, 50.0 + turn + turn * turn * turn / 3.0, 1e-3);
  }
}

TEST(FullObs, ArcRotatesBetweenPeels) {
  const EpisodeResult res = run_episode(SurfaceCurve(ArcSurface{25.0, 0.0, -1}, 50.0),
                                        ControllerKind::FullObs, EpisodeConfig{}, 1);
  EXPECT_TRUE(res.metrics.success);
  int rotations = 0;
  for (const auto& r : res.trajectory) rotations += r.action.kind == ActionKind::Rotate;
  EXPECT_GT(rotations, 5);
  EXPECT_GT(res.metrics.total_cost, 50.0);
  EXPECT_LT(res.metrics.total_cost, 55.0);
}

TEST(Episode, ZeroBudgetFails) {
  EpisodeConfig cfg;
  cfg.controller.max_steps = 0;
  for (auto kind : {ControllerKind::FullObs, ControllerKind::Heuristic}) {
    const EpisodeResult res = run_episode(SurfaceCurve(FlatSurface{0.0}, 50.0), kind, cfg, 1);
    EXPECT_FALSE(res.metrics.success);
    EXPECT_EQ(res.metrics.terminal_event, Event::StepLimit);
    EXPECT_EQ(res.metrics.total_cost, 0.0);
    EXPECT_TRUE(res.trajectory.empty());
  }
}

TEST(Episode, StepLimitMidEpisode) {
  EpisodeConfig cfg;
  cfg.controller.max_steps = 10;
  const EpisodeResult res = run_episode(SurfaceCurve(FlatSurface{0.0}, 50.0),
                                        ControllerKind::Heuristic, cfg, 1);
  EXPECT_EQ(res.metrics.terminal_event, Event::StepLimit);
  EXPECT_EQ(res.metrics.steps, 10);
}

TEST(Episode, Deterministic) {
  const SurfaceCurve c(CornerSurface{8.0, 0.5, 0.3, -1}, 50.0);
  const EpisodeConfig cfg;
  const EpisodeResult a = run_episode(c, ControllerKind::Heuristic, cfg, 1234);
  const EpisodeResult b = run_episode(c, ControllerKind::Heuristic, cfg, 1234);
  EXPECT_EQ(a.metrics.total_cost, b.metrics.total_cost);
  EXPECT_EQ(a.metrics.steps, b.metrics.steps);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].action, b.trajectory[i].action);
    EXPECT_EQ(a.trajectory[i].truth, b.trajectory[i].truth);
    EXPECT_EQ(a.trajectory[i].obs, b.trajectory[i].obs);
  }
}

TEST(Episode, CostIsSumOfActions) {
  for (auto kind : {ControllerKind::FullObs, ControllerKind::Heuristic}) {
    const EpisodeResult res =
        run_episode(SurfaceCurve(ArcSurface{30.0, 0.2, -1}, 50.0), kind, EpisodeConfig{}, 9);
    double sum = 0.0;
    for (const auto& r : res.trajectory) sum += r.cost;
    EXPECT_NEAR(res.metrics.total_cost, sum, 1e-9);
    for (std::size_t i = 0; i < res.trajectory.size(); ++i)
      EXPECT_EQ(res.trajectory[i].step, static_cast<int>(i));
  }
}

TEST(Heuristic, AlignedAndHealthyPeelsOnce) {
  const EpisodeConfig cfg = noiseless();
  EpisodeContext ctx(make_world(SurfaceCurve(FlatSurface{0.0}, 50.0), cfg.sim), cfg, 3);
  HeuristicState hs = exact_belief(ctx.world);
  const IterationResult it = heuristic_step(hs, ctx);
  ASSERT_EQ(it.actions.size(), 1u);
  EXPECT_EQ(it.actions[0].kind, ActionKind::Peel);
  EXPECT_NEAR(it.actions[0].alpha, kPi / 4.0, 1e-12);
  EXPECT_EQ(it.actions[0].d, 1.0);
  EXPECT_FALSE(it.explored);
  EXPECT_EQ(it.health, 0.0);
}

TEST(Heuristic, RealignsFirst) {
  const EpisodeConfig cfg = noiseless();
  WorldState w = make_world(SurfaceCurve(FlatSurface{0.0}, 50.0), cfg.sim);
  w.phi = kPi / 3.0;
  EpisodeContext ctx(w, cfg, 3);
  HeuristicState hs = exact_belief(w);
  const IterationResult it = heuristic_step(hs, ctx);
  ASSERT_GE(it.actions.size(), 2u);
  EXPECT_EQ(it.actions[0].kind, ActionKind::Rotate);
  EXPECT_NEAR(it.actions[0].delta_phi, kPi / 6.0, 1e-12);
  EXPECT_EQ(it.actions[1].kind, ActionKind::Peel);
}

TEST(Heuristic, UnhealthyEnsembleExplores) {
  EpisodeConfig cfg = noiseless();
  cfg.controller.clamp_explore = false;
  int f3 = 0;
  EpisodeHooks hooks{[&f3](UpdateKind k, const ParticleSet&, const ParticleSet&) {
    f3 += k == UpdateKind::F3;
  }};
  const WorldState w = make_world(SurfaceCurve(FlatSurface{0.0}, 50.0), cfg.sim);
  EpisodeContext ctx(w, cfg, 3, hooks);
  const int n = 1000;
  HeuristicState hs = exact_belief(w, n);
  hs.particles.hinge_history = {{Point2(-2, 0), 0}, {Point2(-1, 0), 0}, {Point2(0, 0), 0}};
  // All but one slot believe in a surface turned by 0.5 rad; the peel's F1
  // update leaves only the true slot with weight, so z = 1 - 2/n.
  for (int i = 1; i < n; ++i) {
    hs.particles.particles[i].phi += 0.5;
    hs.particles.particles[i].theta += 0.5;
  }
  const IterationResult it = heuristic_step(hs, ctx);
  EXPECT_NEAR(it.health, 1.0 - 2.0 / n, 1e-12);
  ASSERT_EQ(it.actions.size(), 2u);
  EXPECT_EQ(it.actions[0].kind, ActionKind::Peel);
  EXPECT_EQ(it.actions[1].kind, ActionKind::Rotate);
  EXPECT_NEAR(it.actions[1].delta_phi, -kPi / 4.0, 1e-12);
  EXPECT_TRUE(it.explored);
  EXPECT_EQ(f3, 1);
}

TEST(Heuristic, IterationShape) {
  const EpisodeConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SurfaceCurve c = sample_curve(ShapeKind::Corner, seed);
    EpisodeContext ctx(make_world(c, cfg.sim), cfg, seed);
    HeuristicState hs{init(observe(ctx.world, cfg.sim.noise_std_beta, ctx.rng), cfg.filter, ctx.rng), 0.0};
    while (!ctx.done) {
      const IterationResult it = heuristic_step(hs, ctx);
      int peels = 0;
      for (const auto& a : it.actions) peels += a.kind == ActionKind::Peel;
      if (!ctx.done) {
        EXPECT_EQ(peels, 1);
        EXPECT_LE(it.actions.size(), 3u);
      }
    }
  }
}

TEST(Heuristic, ExploreClampKeepsMargin) {
  ParticleSet ps;
  ps.particles.assign(10, VelcroState{0, 0, 0.0, deg_to_rad(60.0), 10});
  for (std::size_t i = 0; i < 10; ++i) ps.particles[i].theta = deg_to_rad(-5.0 + i);
  ps.weights.assign(10, 1.0);
  ps.viable.assign(10, 1);
  const ControllerConfig cc;
  const FilterConfig fc;
  // Mean theta -0.5 deg, peel angle 60.5 deg; the 0.9 quantile slot sits at
  // +3 deg, so the rotation stops where that slot reaches 30 degrees.
  const double rot = explore_rotation(ps, fc, cc);
  EXPECT_NEAR(rad_to_deg(rot), -27.0, 1e-9);

  ControllerConfig off = cc;
  off.clamp_explore = false;
  EXPECT_EQ(explore_rotation(ps, fc, off), -kPi / 4.0);
}
