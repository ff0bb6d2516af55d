#pragma once

// Benchmark driver: seeded episode generation, CSV metrics, JSONL
// trajectories and summary tables.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "velcro/controller.hpp"
#include "velcro/cost.hpp"
#include "velcro/geometry.hpp"

namespace velcro {

struct BenchmarkConfig {
  std::vector<ShapeKind> shapes{ShapeKind::Flat, ShapeKind::Arc, ShapeKind::Corner};
  std::vector<ControllerKind> controllers{ControllerKind::FullObs, ControllerKind::Heuristic};
  int episodes_per_shape = 200;
  std::uint64_t base_seed = 2024;
  int threads = 0;  // 0: hardware concurrency
  bool record_timing = true;
  std::string csv_path;
  CurveSampling sampling;
  EpisodeConfig episode;
};

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// base_seed XOR hash(shape, episode index).
inline std::uint64_t episode_seed(std::uint64_t base_seed, ShapeKind shape, int index) {
  const auto s = static_cast<std::uint64_t>(shape);
  return base_seed ^ splitmix64((s << 32) ^ static_cast<std::uint32_t>(index));
}

/// Seed of the episode's own generator, decorrelated from the curve sampler.
inline std::uint64_t controller_seed(std::uint64_t seed) { return splitmix64(~seed); }

// ---------------------------------------------------------------------------
// Configuration file: INI sections per module, angles in degrees.

namespace detail {

// get_optional<T> silently drops values that fail to convert; get_value throws.
template <class T>
void read(const boost::property_tree::ptree& pt, const std::string& key, T& out) {
  if (auto child = pt.get_child_optional(key)) out = child->get_value<T>();
}

inline void read_deg(const boost::property_tree::ptree& pt, const std::string& key,
                     double& out_rad) {
  if (auto child = pt.get_child_optional(key)) out_rad = deg_to_rad(child->get_value<double>());
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline void validate(const BenchmarkConfig& cfg);

inline BenchmarkConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  BenchmarkConfig cfg;
  using detail::read;
  using detail::read_deg;
  try {
    if (auto b = tree.get_child_optional("benchmark")) {
      if (auto shapes = b->get_optional<std::string>("shapes")) {
        cfg.shapes.clear();
        for (const auto& s : detail::split_list(*shapes)) cfg.shapes.push_back(parse_shape(s));
      }
      if (auto ctrls = b->get_optional<std::string>("controllers")) {
        cfg.controllers.clear();
        for (const auto& s : detail::split_list(*ctrls))
          cfg.controllers.push_back(parse_controller(s));
      }
      read(*b, "episodes_per_shape", cfg.episodes_per_shape);
      read(*b, "base_seed", cfg.base_seed);
      read(*b, "threads", cfg.threads);
      read(*b, "record_timing", cfg.record_timing);
      read(*b, "csv", cfg.csv_path);
    }
    if (auto g = tree.get_child_optional("geometry")) {
      CurveSampling& s = cfg.sampling;
      read_deg(*g, "tilt_min_deg", s.tilt_min);
      read_deg(*g, "tilt_max_deg", s.tilt_max);
      read(*g, "arc_radius_min", s.arc_radius_min);
      read(*g, "arc_radius_max", s.arc_radius_max);
      read(*g, "corner_radius_min", s.corner_radius_min);
      read(*g, "corner_radius_max", s.corner_radius_max);
      read(*g, "flat_after_min", s.flat_after_min);
      read(*g, "flat_after_max", s.flat_after_max);
      read(*g, "turn_sign", s.turn_sign);
    }
    if (auto m = tree.get_child_optional("sim")) {
      SimConfig& s = cfg.episode.sim;
      read(*m, "initial_peeled", s.initial_peeled);
      read(*m, "strap_length", s.strap_length);
      read_deg(*m, "initial_phi_deg", s.initial_phi);
      read(*m, "substeps", s.substeps);
      read_deg(*m, "forbidden_min_deg", s.forbidden_min);
      read_deg(*m, "forbidden_max_deg", s.forbidden_max);
      read(*m, "forbidden_after_rotation", s.forbidden_after_rotation);
      read_deg(*m, "noise_std_beta_deg", s.noise_std_beta);
    }
    if (auto f = tree.get_child_optional("filter")) {
      FilterConfig& s = cfg.episode.filter;
      read(*f, "n_particles", s.n_particles);
      read_deg(*f, "sigma1_deg", s.sigma1);
      read(*f, "sigma2", s.sigma2);
      read_deg(*f, "sigma3_deg", s.sigma3);
      read_deg(*f, "roughening_theta_deg", s.roughening_theta);
      read(*f, "decay_lambda", s.decay_lambda);
      read(*f, "history_window", s.history_window);
      read(*f, "r_prior_mean", s.r_prior_mean);
      read(*f, "r_prior_std", s.r_prior_std);
      read_deg(*f, "theta_prior_min_deg", s.theta_prior_min);
      read_deg(*f, "theta_prior_max_deg", s.theta_prior_max);
      read(*f, "arc_min_radius", s.arc_min_radius);
      read_deg(*f, "feasible_min_angle_deg", s.feasible_min_angle);
      read_deg(*f, "feasible_max_angle_deg", s.feasible_max_angle);
      read(*f, "weighted_estimate", s.weighted_estimate);
    }
    if (auto c = tree.get_child_optional("controller")) {
      ControllerConfig& s = cfg.episode.controller;
      read(*c, "peel_step", s.peel_step);
      read_deg(*c, "angle_deadband_deg", s.angle_deadband);
      read_deg(*c, "explore_rotation_deg", s.explore_rotation);
      read(*c, "max_steps", s.max_steps);
      read(*c, "clamp_explore", s.clamp_explore);
      read_deg(*c, "explore_min_angle_deg", s.explore_min_angle);
      read(*c, "explore_clamp_quantile", s.explore_clamp_quantile);
      read(*c, "snapshot_particles", s.snapshot_particles);
    }
    if (auto c = tree.get_child_optional("cost")) {
      read(*c, "c1", cfg.episode.cost.c1);
      read(*c, "c2", cfg.episode.cost.c2);
    }
  } catch (const boost::property_tree::ptree_bad_data& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

inline void validate(const BenchmarkConfig& cfg) {
  if (cfg.episodes_per_shape <= 0) throw ConfigError("episodes_per_shape must be positive");
  if (cfg.shapes.empty()) throw ConfigError("no shapes selected");
  if (cfg.controllers.empty()) throw ConfigError("no controllers selected");
  const auto& f = cfg.episode.filter;
  if (!(f.sigma1 > 0 && f.sigma2 > 0 && f.sigma3 > 0))
    throw ConfigError("filter standard deviations must be positive");
  if (!(f.decay_lambda > 0.0 && f.decay_lambda < 1.0))
    throw ConfigError("decay_lambda must lie in (0, 1)");
  if (f.n_particles < 1) throw ConfigError("n_particles must be positive");
  if (!(f.feasible_min_angle < f.feasible_max_angle))
    throw ConfigError("feasible_min_angle must be below feasible_max_angle");
  const auto& c = cfg.episode.controller;
  if (!(c.peel_step > 0.0)) throw ConfigError("peel_step must be positive");
  if (c.max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (!(c.explore_clamp_quantile >= 0.5 && c.explore_clamp_quantile <= 1.0))
    throw ConfigError("explore_clamp_quantile must lie in [0.5, 1]");
  if (!(cfg.episode.cost.c1 > 0.0 && cfg.episode.cost.c2 > 0.0))
    throw ConfigError("cost weights must be positive");
  if (cfg.episode.sim.substeps < 1) throw ConfigError("substeps must be at least 1");
}

inline BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Episode rows and CSV

struct EpisodeRow {
  ShapeKind shape = ShapeKind::Flat;
  int episode_index = 0;
  std::uint64_t seed = 0;
  ControllerKind controller = ControllerKind::FullObs;
  EpisodeMetrics metrics;
  double wall_ms = 0.0;
};

inline constexpr const char* kCsvHeader =
    "shape,episode_index,seed,controller,success,terminal_event,total_cost,steps,wall_ms";

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline void write_csv_row(std::ostream& os, const EpisodeRow& r) {
  os << to_string(r.shape) << ',' << r.episode_index << ',' << r.seed << ','
     << to_string(r.controller) << ',' << (r.metrics.success ? 1 : 0) << ','
     << to_string(r.metrics.terminal_event) << ',' << format_double(r.metrics.total_cost) << ','
     << r.metrics.steps << ',' << format_double(r.wall_ms) << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<EpisodeRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) write_csv_row(os, r);
}

inline std::vector<EpisodeRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw ConfigError("unexpected CSV header");
  std::vector<EpisodeRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw ConfigError("malformed CSV row: " + line);
    EpisodeRow r;
    r.shape = parse_shape(f[0]);
    r.episode_index = std::stoi(f[1]);
    r.seed = std::stoull(f[2]);
    r.controller = parse_controller(f[3]);
    r.metrics.success = f[4] == "1";
    r.metrics.terminal_event = parse_event(f[5]);
    r.metrics.total_cost = std::stod(f[6]);
    r.metrics.steps = std::stoi(f[7]);
    r.wall_ms = std::stod(f[8]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Trajectory JSONL

inline nlohmann::json to_json(const VelcroState& s) {
  return {{"hx", s.hx}, {"hy", s.hy}, {"theta", s.theta}, {"phi", s.phi}, {"r", s.r}};
}

inline VelcroState state_from_json(const nlohmann::json& j) {
  return {j.at("hx").get<double>(), j.at("hy").get<double>(), j.at("theta").get<double>(),
          j.at("phi").get<double>(), j.at("r").get<double>()};
}

inline nlohmann::json to_json(const TrajectoryRecord& r) {
  nlohmann::json particles = nlohmann::json::array();
  for (const auto& p : r.particles) particles.push_back({p.hx, p.hy, p.theta, p.phi, p.r});
  return {
      {"step", r.step},
      {"action",
       {{"kind", r.action.kind == ActionKind::Peel ? "peel" : "rotate"},
        {"alpha", r.action.alpha},
        {"d", r.action.d},
        {"s", r.action.s()},
        {"delta_phi", r.action.delta_phi}}},
      {"truth", to_json(r.truth)},
      {"effector", {r.effector.x(), r.effector.y()}},
      {"obs", {{"tx", r.obs.tx}, {"ty", r.obs.ty}, {"beta", r.obs.beta}}},
      {"estimate", r.estimate ? to_json(*r.estimate) : nlohmann::json(nullptr)},
      {"health", r.health ? nlohmann::json(*r.health) : nlohmann::json(nullptr)},
      {"cost", r.cost},
      {"event", std::string(to_string(r.event))},
      {"particles", particles},
  };
}

inline TrajectoryRecord record_from_json(const nlohmann::json& j) {
  TrajectoryRecord r;
  r.step = j.at("step").get<int>();
  const auto& a = j.at("action");
  r.action.kind = a.at("kind").get<std::string>() == "peel" ? ActionKind::Peel : ActionKind::Rotate;
  r.action.alpha = a.at("alpha").get<double>();
  r.action.d = a.at("d").get<double>();
  r.action.delta_phi = a.at("delta_phi").get<double>();
  r.truth = state_from_json(j.at("truth"));
  r.effector = {j.at("effector").at(0).get<double>(), j.at("effector").at(1).get<double>()};
  const auto& o = j.at("obs");
  r.obs = {o.at("tx").get<double>(), o.at("ty").get<double>(), o.at("beta").get<double>()};
  if (!j.at("estimate").is_null()) r.estimate = state_from_json(j.at("estimate"));
  if (!j.at("health").is_null()) r.health = j.at("health").get<double>();
  r.cost = j.at("cost").get<double>();
  r.event = parse_event(j.at("event").get<std::string>());
  for (const auto& p : j.at("particles"))
    r.particles.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
                           p.at(3).get<double>(), p.at(4).get<double>()});
  return r;
}

inline void dump_trajectory(std::ostream& os, const std::vector<TrajectoryRecord>& records) {
  for (const auto& r : records) os << to_json(r).dump() << '\n';
  if (!os) throw std::runtime_error("failed writing trajectory");
}

inline void dump_trajectory(const std::string& path,
                            const std::vector<TrajectoryRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open trajectory file: " + path);
  dump_trajectory(os, records);
}

inline std::vector<TrajectoryRecord> load_trajectory(std::istream& is) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

inline nlohmann::json to_json(const SurfaceCurve& c) {
  nlohmann::json j = {{"shape", std::string(to_string(c.kind()))},
                      {"attached_length", c.attached_length()},
                      {"tilt_deg", rad_to_deg(c.tilt())}};
  if (const auto* a = std::get_if<ArcSurface>(&c.shape())) {
    j["radius"] = a->radius;
    j["turn_sign"] = a->turn_sign;
  } else if (const auto* k = std::get_if<CornerSurface>(&c.shape())) {
    j["corner_radius"] = k->corner_radius;
    j["flat_after_ratio"] = k->flat_after_ratio;
    j["turn_sign"] = k->turn_sign;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Benchmark

struct SummaryRow {
  ShapeKind shape = ShapeKind::Flat;
  ControllerKind controller = ControllerKind::FullObs;
  CostSummary stats;
};

struct BenchmarkResult {
  std::vector<EpisodeRow> rows;  // sorted by (shape, controller, episode index)
  std::vector<SummaryRow> summary;
};

/// Per-episode instrumentation. Callbacks run on worker threads.
struct BenchmarkObserver {
  EpisodeHooks hooks;
  std::function<void(const EpisodeRow&, const EpisodeResult&)> on_episode;
};

inline EpisodeRow run_single(const BenchmarkConfig& cfg, ShapeKind shape, ControllerKind kind,
                             int index, const BenchmarkObserver* observer = nullptr,
                             EpisodeResult* keep = nullptr) {
  const std::uint64_t seed = episode_seed(cfg.base_seed, shape, index);
  const SurfaceCurve curve = sample_curve(shape, seed, cfg.sampling);
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeResult res = run_episode(curve, kind, cfg.episode, controller_seed(seed),
                                  observer ? observer->hooks : EpisodeHooks{});
  const auto t1 = std::chrono::steady_clock::now();
  EpisodeRow row{shape, index, seed, kind, res.metrics, 0.0};
  if (cfg.record_timing)
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (observer && observer->on_episode) observer->on_episode(row, res);
  if (keep) *keep = std::move(res);
  return row;
}

inline std::vector<SummaryRow> summarize_rows(const std::vector<EpisodeRow>& rows,
                                              const std::vector<ShapeKind>& shapes,
                                              const std::vector<ControllerKind>& controllers) {
  std::vector<SummaryRow> out;
  for (ShapeKind s : shapes) {
    for (ControllerKind c : controllers) {
      std::vector<EpisodeMetrics> m;
      for (const auto& r : rows)
        if (r.shape == s && r.controller == c) m.push_back(r.metrics);
      if (!m.empty()) out.push_back({s, c, summarize(m)});
    }
  }
  return out;
}

inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg,
                                     const BenchmarkObserver* observer = nullptr) {
  validate(cfg);
  struct Job {
    ShapeKind shape;
    ControllerKind controller;
    int index;
  };
  std::vector<Job> jobs;
  for (ShapeKind s : cfg.shapes)
    for (ControllerKind c : cfg.controllers)
      for (int i = 0; i < cfg.episodes_per_shape; ++i) jobs.push_back({s, c, i});

  std::vector<EpisodeRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++)
      rows[j] = run_single(cfg, jobs[j].shape, jobs[j].controller, jobs[j].index, observer);
  };
  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  return {rows, summarize_rows(rows, cfg.shapes, cfg.controllers)};
}

inline void print_summary(std::ostream& os, const std::vector<SummaryRow>& summary) {
  os << std::left << std::setw(8) << "shape" << std::setw(11) << "controller" << std::right
     << std::setw(10) << "E(succ)" << std::setw(10) << "E(all)" << std::setw(10) << "eta%"
     << std::setw(6) << "n" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& r : summary) {
    os << std::left << std::setw(8) << to_string(r.shape) << std::setw(11)
       << to_string(r.controller) << std::right << std::setw(10) << r.stats.mean_cost_success
       << std::setw(10) << r.stats.mean_cost_all << std::setw(10)
       << r.stats.success_rate_percent << std::setw(6) << r.stats.episodes << '\n';
  }
  os << std::defaultfloat;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& summary) {
  os << "shape,controller,episodes,successes,mean_cost_success,mean_cost_all,success_rate\n";
  for (const auto& r : summary) {
    os << to_string(r.shape) << ',' << to_string(r.controller) << ',' << r.stats.episodes << ','
       << r.stats.successes << ',' << format_double(r.stats.mean_cost_success) << ','
       << format_double(r.stats.mean_cost_all) << ','
       << format_double(r.stats.success_rate_percent) << '\n';
  }
}

}  // namespace velcro
