#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>

#include "velcro/angles.hpp"
#include "velcro/simulator.hpp"

namespace velcro {

struct CostConfig {
  double c1 = 1.0;  // per cm peeled
  double c2 = 1.0;  // per radian rotated
};

/// Quadratic penalty on the deviation of the peel angle from a right angle.
inline double potential(double phi, double theta) {
  const double dev = angle_diff(phi - theta, kHalfPi);
  return 1.0 + dev * dev;
}

/// Line integral of the potential along the recorded path: over r for a peel,
/// over phi for a rotation. Trapezoidal rule on the path samples.
inline double action_cost(const StepOutcome& outcome, const Action& action,
                          const CostConfig& cfg) {
  const auto& path = outcome.path_samples;
  double integral = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto& a = path[k - 1];
    const auto& b = path[k];
    const double mean_u = 0.5 * (potential(a.phi, a.theta) + potential(b.phi, b.theta));
    const double step = action.kind == ActionKind::Peel ? b.r - a.r : b.phi - a.phi;
    integral += mean_u * step;
  }
  return action.kind == ActionKind::Peel ? cfg.c1 * integral : cfg.c2 * std::abs(integral);
}

struct EpisodeMetrics {
  double total_cost = 0.0;
  bool success = false;
  int steps = 0;
  Event terminal_event = Event::StepLimit;
};

struct CostSummary {
  double mean_cost_success = 0.0;   // NaN when no episode succeeded
  double mean_cost_all = 0.0;
  double success_rate_percent = 0.0;
  std::size_t episodes = 0;
  std::size_t successes = 0;
};

inline CostSummary summarize(std::span<const EpisodeMetrics> episodes) {
  if (episodes.empty()) throw std::domain_error("cannot aggregate an empty episode set");
  CostSummary s;
  s.episodes = episodes.size();
  double sum_success = 0.0;
  double sum_all = 0.0;
  for (const auto& e : episodes) {
    sum_all += e.total_cost;
    if (e.success) {
      ++s.successes;
      sum_success += e.total_cost;
    }
  }
  s.mean_cost_all = sum_all / static_cast<double>(s.episodes);
  s.mean_cost_success = s.successes ? sum_success / static_cast<double>(s.successes)
                                    : std::nan("");
  s.success_rate_percent = 100.0 * static_cast<double>(s.successes) /
                           static_cast<double>(s.episodes);
  return s;
}

/// (mean cost over successful episodes, success rate in percent).
inline std::pair<double, double> aggregate(std::span<const EpisodeMetrics> episodes) {
  const CostSummary s = summarize(episodes);
  return {s.mean_cost_success, s.success_rate_percent};
}

}  // namespace velcro
