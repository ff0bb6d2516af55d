#pragma once

// Quasi-static ground-truth model of a taut strap being peeled off a surface.

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "velcro/angles.hpp"
#include "velcro/geometry.hpp"

namespace velcro {

using Rng = std::mt19937_64;

/// Peeling configuration: hinge position, attached-part direction theta,
/// peeled-part direction phi and peeled length r.
struct VelcroState {
  double hx = 0.0;
  double hy = 0.0;
  double theta = 0.0;
  double phi = kHalfPi;
  double r = 10.0;

  Point2 hinge() const { return {hx, hy}; }
  Point2 tip() const { return hinge() + r * Point2(std::cos(phi), std::sin(phi)); }

  friend bool operator==(const VelcroState&, const VelcroState&) = default;
};

enum class ActionKind { Peel, Rotate };

struct Action {
  double alpha = 0.0;
  double d = 0.0;
  ActionKind kind = ActionKind::Peel;
  double delta_phi = 0.0;

  static Action peel(double alpha, double d) { return {alpha, d, ActionKind::Peel, 0.0}; }
  static Action rotate(double delta_phi) { return {0.0, 0.0, ActionKind::Rotate, delta_phi}; }

  /// The binary s flag: 0 for peeling, 1 for non-peeling.
  int s() const { return kind == ActionKind::Peel ? 0 : 1; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct Observation {
  double tx = 0.0;
  double ty = 0.0;
  double beta = 0.0;

  Point2 tip() const { return {tx, ty}; }

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Outcome of a single action, and the terminal reason of an episode.
enum class Event { Ok, Slack, ForbiddenZone, FullyPeeled, FilterDivergence, StepLimit };

inline std::string_view to_string(Event e) {
  switch (e) {
    case Event::Ok: return "ok";
    case Event::Slack: return "slack";
    case Event::ForbiddenZone: return "forbidden_zone";
    case Event::FullyPeeled: return "fully_peeled";
    case Event::FilterDivergence: return "filter_divergence";
    case Event::StepLimit: return "step_limit";
  }
  return "?";
}

inline Event parse_event(std::string_view s) {
  for (Event e : {Event::Ok, Event::Slack, Event::ForbiddenZone, Event::FullyPeeled,
                  Event::FilterDivergence, Event::StepLimit}) {
    if (to_string(e) == s) return e;
  }
  throw ConfigError("unknown event: " + std::string(s));
}

class SlackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuasiStaticStep {
  double dr = 0.0;
  VelcroState next;
};

/// Advances a state by moving the tip a distance d in direction alpha, treating
/// the attached surface as the straight line through the hinge along theta.
///
/// Eliminating the hinge update from the tautness constraint gives a linear
/// equation in dr. theta is carried over unchanged.
inline QuasiStaticStep solve_quasi_static_step(const VelcroState& state, double alpha,
                                               double d) {
  if (d == 0.0) return {0.0, state};
  const Point2 u(std::cos(state.theta), std::sin(state.theta));
  const Point2 v = state.r * Point2(std::cos(state.phi), std::sin(state.phi)) +
                   d * Point2(std::cos(alpha), std::sin(alpha));
  const double excess = v.squaredNorm() - state.r * state.r;
  if (excess < 0.0) throw SlackError("tip moved inside the taut radius");
  const double denom = 2.0 * (state.r + v.dot(u));
  if (!(denom > 1e-12)) throw NumericError("degenerate peel geometry");
  const double dr = excess / denom;

  VelcroState next = state;
  next.hx += dr * u.x();
  next.hy += dr * u.y();
  next.r += dr;
  const Point2 rel = v - dr * u;
  next.phi = std::atan2(rel.y(), rel.x());
  return {dr, next};
}

struct SimConfig {
  double initial_peeled = 10.0;
  double strap_length = 60.0;
  /// Initial phi measured in the world frame.
  double initial_phi = kHalfPi;
  int substeps = 32;
  int bisection_iterations = 80;
  double forbidden_min = deg_to_rad(5.0);
  double forbidden_max = deg_to_rad(175.0);
  bool forbidden_after_rotation = true;
  /// Standard deviation of the force-direction noise.
  double noise_std_beta = deg_to_rad(1.0);
};

/// True configuration: how far the strap has been peeled along the curve and
/// the direction of the peeled part.
struct WorldState {
  SurfaceCurve curve;
  double ell = 0.0;
  double phi = kHalfPi;
  double initial_peeled = 10.0;
  double strap_length = 60.0;

  double r() const { return initial_peeled + ell; }
  Point2 hinge() const { return curve.point_at(ell); }
  double theta() const { return curve.tangent_at(ell); }
  Point2 tip() const { return hinge() + r() * Point2(std::cos(phi), std::sin(phi)); }

  VelcroState velcro_state() const {
    const Point2 h = hinge();
    return {h.x(), h.y(), theta(), phi, r()};
  }

  /// phi - theta wrapped to (-pi, pi].
  double relative_angle() const { return angle_diff(phi, theta()); }
};

inline WorldState make_world(const SurfaceCurve& curve, const SimConfig& cfg) {
  return WorldState{curve, 0.0, cfg.initial_phi, cfg.initial_peeled, cfg.strap_length};
}

struct PathSample {
  double r = 0.0;
  double phi = 0.0;
  double theta = 0.0;
};

struct StepOutcome {
  WorldState state;
  Event event = Event::Ok;
  std::vector<PathSample> path_samples;
};

inline bool in_forbidden_zone(const WorldState& w, const SimConfig& cfg) {
  const double rel = w.relative_angle();
  return rel < cfg.forbidden_min || rel > cfg.forbidden_max;
}

inline PathSample sample_of(const WorldState& w) { return {w.r(), w.phi, w.theta()}; }

/// Moves the tip a distance d along alpha, split into substeps. Each substep
/// solves the exact curved-surface tautness condition for the new hinge
/// position by bisection.
inline StepOutcome apply_peel(const WorldState& world, double alpha, double d, int substeps,
                              const SimConfig& cfg = {}) {
  if (!(d > 0.0)) throw std::invalid_argument("peel distance must be positive");
  if (substeps < 1) throw std::invalid_argument("substeps must be at least 1");

  StepOutcome out{world, Event::Ok, {sample_of(world)}};
  WorldState& w = out.state;
  const double end = w.curve.attached_length();
  const Point2 step = (d / substeps) * Point2(std::cos(alpha), std::sin(alpha));
  Point2 tip = w.tip();

  for (int k = 0; k < substeps; ++k) {
    tip += step;
    auto g = [&](double ell) {
      return (tip - w.curve.point_at(ell)).norm() - (w.initial_peeled + ell);
    };
    const double g_lo = g(w.ell);
    // Relative slack tolerance absorbs round-off in the tip update.
    if (g_lo < -1e-12 * w.r()) {
      out.event = Event::Slack;
      return out;
    }
    if (g(end) >= 0.0) {
      // The hinge reaches the end of the attached region within this substep:
      // stop the tip where it does.
      const Point2 start = tip - step;
      double lo_t = 0.0;
      double hi_t = 1.0;
      for (int i = 0; i < cfg.bisection_iterations; ++i) {
        const double mid = 0.5 * (lo_t + hi_t);
        tip = start + mid * step;
        if (g(end) >= 0.0) hi_t = mid;
        else lo_t = mid;
      }
      tip = start + hi_t * step;
      w.ell = end;
      const Point2 rel = tip - w.hinge();
      w.phi = std::atan2(rel.y(), rel.x());
      out.path_samples.push_back(sample_of(w));
      out.event = Event::FullyPeeled;
      return out;
    }
    double lo = w.ell;
    double hi = end;
    if (g_lo > 0.0) {
      for (int i = 0; i < cfg.bisection_iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) lo = mid;
        else hi = mid;
      }
      w.ell = 0.5 * (lo + hi);
    }
    const Point2 rel = tip - w.hinge();
    w.phi = std::atan2(rel.y(), rel.x());
    out.path_samples.push_back(sample_of(w));
  }
  if (in_forbidden_zone(w, cfg)) out.event = Event::ForbiddenZone;
  return out;
}

/// Swings the taut peeled part about the fixed hinge.
inline StepOutcome apply_rotate(const WorldState& world, double delta_phi, int substeps,
                                const SimConfig& cfg = {}) {
  if (!(std::abs(delta_phi) < kPi)) throw std::invalid_argument("rotation must be below pi");
  if (substeps < 1) throw std::invalid_argument("substeps must be at least 1");

  StepOutcome out{world, Event::Ok, {}};
  out.path_samples.reserve(substeps + 1);
  const double phi0 = world.phi;
  const PathSample base = sample_of(world);
  for (int k = 0; k <= substeps; ++k) {
    PathSample s = base;
    s.phi = phi0 + delta_phi * k / substeps;
    out.path_samples.push_back(s);
  }
  out.state.phi = phi0 + delta_phi;
  if (cfg.forbidden_after_rotation && in_forbidden_zone(out.state, cfg))
    out.event = Event::ForbiddenZone;
  return out;
}

/// Tip position (exact) and force direction beta = phi + pi plus Gaussian noise.
inline Observation observe(const WorldState& world, double noise_std_beta, Rng& rng) {
  const Point2 t = world.tip();
  double eps = 0.0;
  if (noise_std_beta > 0.0) eps = std::normal_distribution<double>(0.0, noise_std_beta)(rng);
  return {t.x(), t.y(), wrap_angle(world.phi + kPi + eps)};
}

}  // namespace velcro
