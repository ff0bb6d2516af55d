#pragma once

// Particle filter over VelcroState with state-space decomposition.
//
// Each measurement model reweights the ensemble and then resamples only the
// coordinates it observes. Weights are normalized so the best particle has
// weight 1; a slot's weight after an update is its likelihood relative to the
// best hypothesis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "velcro/angles.hpp"
#include "velcro/simulator.hpp"

namespace velcro {

struct FilterConfig {
  int n_particles = 500;
  double sigma1 = deg_to_rad(1.0);   // force direction
  double sigma2 = 0.5;               // tip position, cm
  double sigma3 = deg_to_rad(10.0);  // attached-part direction
  double roughening_theta = deg_to_rad(12.0);
  double decay_lambda = 0.9;
  int history_window = 15;
  double r_prior_mean = 10.0;
  double r_prior_std = 0.5;
  double theta_prior_min = deg_to_rad(-75.0);
  double theta_prior_max = deg_to_rad(75.0);
  /// Circle fits tighter than this are treated as fitting noise.
  double arc_min_radius = 2.0;
  /// A particle whose predicted peel angle leaves this band is dropped: the
  /// episode would have ended if the true state had done the same.
  double feasible_min_angle = deg_to_rad(5.0);
  double feasible_max_angle = deg_to_rad(175.0);
  /// Use the latest update weights in estimate(). Off: every slot with nonzero
  /// weight counts equally, which is the posterior after resampling.
  bool weighted_estimate = false;
};

class FilterDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HingeSample {
  Point2 point;
  int step = 0;
};

struct ParticleSet {
  std::vector<VelcroState> particles;
  std::vector<double> weights;
  /// Zero for particles whose last predicted transition was infeasible.
  std::vector<std::uint8_t> viable;
  std::deque<HingeSample> hinge_history;
  /// Number of predictions applied so far.
  int step = 0;

  std::size_t size() const { return particles.size(); }
};

/// Draws the initial ensemble around the first observation and records its
/// mean hinge as the first history sample.
inline ParticleSet init(const Observation& first_obs, const FilterConfig& cfg, Rng& rng) {
  if (cfg.n_particles < 1) throw ConfigError("n_particles must be positive");
  std::normal_distribution<double> r_dist(cfg.r_prior_mean, cfg.r_prior_std);
  std::normal_distribution<double> phi_noise(0.0, cfg.sigma1);
  std::uniform_real_distribution<double> theta_dist(cfg.theta_prior_min, cfg.theta_prior_max);

  const double phi0 = first_obs.beta - kPi;
  ParticleSet ps;
  ps.particles.reserve(cfg.n_particles);
  for (int i = 0; i < cfg.n_particles; ++i) {
    VelcroState s;
    s.r = cfg.r_prior_std > 0.0 ? r_dist(rng) : cfg.r_prior_mean;
    s.r = std::max(s.r, 1e-3);
    s.phi = wrap_angle(phi0 + (cfg.sigma1 > 0.0 ? phi_noise(rng) : 0.0));
    s.hx = first_obs.tx - s.r * std::cos(s.phi);
    s.hy = first_obs.ty - s.r * std::sin(s.phi);
    s.theta = theta_dist(rng);
    ps.particles.push_back(s);
  }
  ps.weights.assign(ps.particles.size(), 1.0);
  ps.viable.assign(ps.particles.size(), 1);
  Point2 mean = Point2::Zero();
  for (const auto& p : ps.particles) mean += p.hinge();
  ps.hinge_history.push_back({mean / static_cast<double>(ps.size()), 0});
  return ps;
}

/// Propagates every particle through the transition model. A peel uses the
/// locally flat closed-form step with each particle's own theta and then
/// roughens theta; a rotation only swings phi. Particles that end up slack or
/// outside the feasible peel-angle band are marked not viable.
inline void predict(ParticleSet& ps, const Action& action, const FilterConfig& cfg, Rng& rng,
                    double roughening_scale = 1.0) {
  const double rough = cfg.roughening_theta * roughening_scale;
  std::normal_distribution<double> noise(0.0, rough > 0.0 ? rough : 1.0);
  auto feasible = [&cfg](const VelcroState& p) {
    const double rel = angle_diff(p.phi, p.theta);
    return rel >= cfg.feasible_min_angle && rel <= cfg.feasible_max_angle;
  };
  for (std::size_t i = 0; i < ps.size(); ++i) {
    VelcroState& p = ps.particles[i];
    ps.viable[i] = 1;
    if (action.kind == ActionKind::Rotate) {
      p.phi += action.delta_phi;
      if (!feasible(p)) ps.viable[i] = 0;
      continue;
    }
    try {
      p = solve_quasi_static_step(p, action.alpha, action.d).next;
    } catch (const SlackError&) {
      ps.viable[i] = 0;
    } catch (const NumericError&) {
      ps.viable[i] = 0;
    }
    if (rough > 0.0) p.theta += noise(rng);
    if (!feasible(p)) ps.viable[i] = 0;
  }
  ps.weights.assign(ps.viable.begin(), ps.viable.end());
  ++ps.step;
}

namespace detail {

/// Max-normalizes in place; throws if every weight vanished.
inline void max_normalize(std::vector<double>& w) {
  double top = 0.0;
  for (double x : w) top = std::max(top, x);
  if (!(top > 0.0) || !std::isfinite(top)) throw FilterDivergence("all particle weights are zero");
  for (double& x : w) x /= top;
}

/// Systematic resampling: source index for each slot.
inline std::vector<std::size_t> systematic_indices(const std::vector<double>& w, Rng& rng) {
  const std::size_t n = w.size();
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) cumulative[i] = (acc += w[i]);
  const double step = acc / static_cast<double>(n);
  double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  std::vector<std::size_t> idx(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i, u += step) {
    while (j + 1 < n && cumulative[j] < u) ++j;
    idx[i] = j;
  }
  return idx;
}

template <class Likelihood, class Copy>
void reweight_and_resample(ParticleSet& ps, Rng& rng, Likelihood likelihood, Copy copy) {
  std::vector<double> w(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    w[i] = ps.viable[i] ? likelihood(ps.particles[i]) : 0.0;
  max_normalize(w);
  const auto idx = systematic_indices(w, rng);
  const std::vector<VelcroState> source = ps.particles;
  for (std::size_t i = 0; i < ps.size(); ++i) copy(ps.particles[i], source[idx[i]]);
  ps.weights = std::move(w);
}

inline double gaussian(double err, double sigma) {
  return std::exp(-(err * err) / (2.0 * sigma * sigma));
}

}  // namespace detail

/// Force-direction model; resamples phi only.
inline void update_f1(ParticleSet& ps, const Observation& obs, const FilterConfig& cfg,
                      Rng& rng) {
  detail::reweight_and_resample(
      ps, rng,
      [&](const VelcroState& p) {
        return detail::gaussian(angle_diff(obs.beta, p.phi + kPi), cfg.sigma1);
      },
      [](VelcroState& dst, const VelcroState& src) { dst.phi = src.phi; });
}

/// Tip-position model; resamples (hx, hy, r) jointly. Valid while the hinge is
/// stationary. Appends the posterior-mean hinge to the history.
inline void update_f2(ParticleSet& ps, const Observation& obs, const FilterConfig& cfg,
                      Rng& rng) {
  const Point2 measured = obs.tip();
  detail::reweight_and_resample(
      ps, rng,
      [&](const VelcroState& p) {
        return detail::gaussian((measured - p.tip()).norm(), cfg.sigma2);
      },
      [](VelcroState& dst, const VelcroState& src) {
        dst.hx = src.hx;
        dst.hy = src.hy;
        dst.r = src.r;
      });
  // Resampled slots are equally weighted, so the plain mean is the posterior mean.
  Point2 mean = Point2::Zero();
  for (const auto& p : ps.particles) mean += p.hinge();
  mean /= static_cast<double>(ps.size());
  ps.hinge_history.push_back({mean, ps.step});
  const auto window = static_cast<std::size_t>(std::max(cfg.history_window, 1));
  while (ps.hinge_history.size() > window) ps.hinge_history.pop_front();
}

/// Attached-direction model around an externally supplied estimate; resamples
/// theta only.
inline void update_f3(ParticleSet& ps, double theta_hat, const FilterConfig& cfg, Rng& rng) {
  detail::reweight_and_resample(
      ps, rng,
      [&](const VelcroState& p) {
        return detail::gaussian(angle_diff(p.theta, theta_hat), cfg.sigma3);
      },
      [](VelcroState& dst, const VelcroState& src) { dst.theta = src.theta; });
}

enum class FitModel { Line, Arc };

struct ThetaFit {
  double theta = 0.0;
  /// Weighted mean squared residual of the winning model, cm^2.
  double residual = 0.0;
  FitModel model = FitModel::Line;
  double radius = 0.0;  // arc fits only
  Point2 center = Point2::Zero();
};

/// Estimates the attached-part direction at the newest hinge from the hinge
/// history. Fits a line (weighted PCA) and, with four or more points, a circle
/// (weighted Kasa least squares); the model with the smaller weighted mean
/// squared residual wins. Older samples are down-weighted by decay_lambda^age.
/// Returns nullopt when there are fewer than three samples or they coincide.
inline std::optional<ThetaFit> fit_theta_aux(const std::deque<HingeSample>& history,
                                             const FilterConfig& cfg) {
  const std::size_t window = static_cast<std::size_t>(std::max(cfg.history_window, 1));
  const std::size_t n = std::min(history.size(), window);
  if (n < 3) return std::nullopt;
  const std::size_t first = history.size() - n;

  Eigen::MatrixX2d pts(n, 2);
  Eigen::VectorXd w(n);
  for (std::size_t k = 0; k < n; ++k) {
    pts.row(k) = history[first + k].point.transpose();
    w(k) = std::pow(cfg.decay_lambda, static_cast<double>(n - 1 - k));
  }
  const double wsum = w.sum();
  const Eigen::RowVector2d centroid = (w.asDiagonal() * pts).colwise().sum() / wsum;
  const Eigen::MatrixX2d centered = pts.rowwise() - centroid;
  const Eigen::Matrix2d cov = centered.transpose() * w.asDiagonal() * centered / wsum;
  if (cov.trace() < 1e-18) return std::nullopt;

  const Point2 newest = pts.row(n - 1).transpose();
  const Point2 motion = newest - pts.row(0).transpose();
  auto aligned = [&motion](Point2 dir) { return dir.dot(motion) < 0.0 ? Point2(-dir) : dir; };

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Point2 axis = aligned(eig.eigenvectors().col(1));
  ThetaFit best{std::atan2(axis.y(), axis.x()), std::max(eig.eigenvalues()(0), 0.0),
                FitModel::Line};

  if (n >= 4) {
    // x^2 + y^2 + D x + E y + F = 0, solved with sqrt(w) row scaling.
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double sw = std::sqrt(w(k));
      const double x = centered(k, 0);
      const double y = centered(k, 1);
      a.row(k) << sw * x, sw * y, sw;
      b(k) = -sw * (x * x + y * y);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() == 3) {
      const Eigen::Vector3d sol = qr.solve(b);
      const Point2 center_local(-0.5 * sol(0), -0.5 * sol(1));
      const double r2 = center_local.squaredNorm() - sol(2);
      if (r2 > cfg.arc_min_radius * cfg.arc_min_radius) {
        const double radius = std::sqrt(r2);
        double res = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double e = (centered.row(k).transpose() - center_local).norm() - radius;
          res += w(k) * e * e;
        }
        res /= wsum;
        if (res < best.residual) {
          const Point2 center = center_local + centroid.transpose();
          const Point2 radial = newest - center;
          const Point2 tangent = aligned(Point2(-radial.y(), radial.x()).normalized());
          best = {std::atan2(tangent.y(), tangent.x()), res, FitModel::Arc, radius, center};
        }
      }
    }
  }
  return best;
}

/// max(0, fraction of weights below 0.1 minus fraction above 0.9).
inline double health_index(const ParticleSet& ps) {
  if (ps.weights.empty()) return 0.0;
  std::size_t low = 0;
  std::size_t high = 0;
  for (double w : ps.weights) {
    if (w < 0.1) ++low;
    if (w > 0.9) ++high;
  }
  const double n = static_cast<double>(ps.weights.size());
  return std::max(0.0, (static_cast<double>(low) - static_cast<double>(high)) / n);
}

/// Mean state over the ensemble; angles use the circular mean. Slots with zero
/// weight are left out.
inline VelcroState estimate(const ParticleSet& ps, bool weighted = false) {
  double wsum = 0.0;
  double hx = 0.0, hy = 0.0, r = 0.0;
  double ts = 0.0, tc = 0.0, ps_ = 0.0, pc = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double w = weighted ? ps.weights[i] : (ps.weights[i] > 0.0 ? 1.0 : 0.0);
    const VelcroState& p = ps.particles[i];
    wsum += w;
    hx += w * p.hx;
    hy += w * p.hy;
    r += w * p.r;
    ts += w * std::sin(p.theta);
    tc += w * std::cos(p.theta);
    ps_ += w * std::sin(p.phi);
    pc += w * std::cos(p.phi);
  }
  if (!(wsum > 0.0)) throw FilterDivergence("cannot estimate from zero total weight");
  return {hx / wsum, hy / wsum, std::atan2(ts, tc), std::atan2(ps_, pc), r / wsum};
}

inline VelcroState estimate(const ParticleSet& ps, const FilterConfig& cfg) {
  return estimate(ps, cfg.weighted_estimate);
}

}  // namespace velcro
