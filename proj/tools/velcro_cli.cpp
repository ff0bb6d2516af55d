// velcro: benchmark driver for the peeling simulator and controllers.
//
//   velcro bench  [--config FILE] [--episodes N] [--shapes flat,arc] ...
//   velcro run    --shape arc --index 3 --controller heuristic --out traj.jsonl
//   velcro sample --shape corner --count 5

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "velcro/harness.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  int episodes = -1;
  std::string shapes;
  std::string controllers;
  long long seed = -1;
  double noise_deg = -1.0;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "INI configuration file (env: VELCRO_CONFIG)");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--noise-deg", o.noise_deg, "Force-direction noise std, degrees");
}

velcro::BenchmarkConfig resolve(const CommonOptions& o) {
  std::string path = o.config_path;
  if (const char* env = std::getenv("VELCRO_CONFIG"); env && *env) path = env;
  velcro::BenchmarkConfig cfg = path.empty() ? velcro::BenchmarkConfig{} : velcro::load_config(path);
  if (o.episodes > 0) cfg.episodes_per_shape = o.episodes;
  if (!o.shapes.empty()) {
    cfg.shapes.clear();
    for (const auto& s : velcro::detail::split_list(o.shapes))
      cfg.shapes.push_back(velcro::parse_shape(s));
  }
  if (!o.controllers.empty()) {
    cfg.controllers.clear();
    for (const auto& s : velcro::detail::split_list(o.controllers))
      cfg.controllers.push_back(velcro::parse_controller(s));
  }
  if (o.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(o.seed);
  if (o.noise_deg >= 0.0) cfg.episode.sim.noise_std_beta = velcro::deg_to_rad(o.noise_deg);
  if (o.threads >= 0) cfg.threads = o.threads;
  velcro::validate(cfg);
  return cfg;
}

int run_bench(const CommonOptions& o, const std::string& csv, const std::string& summary_csv,
              bool no_timing) {
  velcro::BenchmarkConfig cfg = resolve(o);
  if (no_timing) cfg.record_timing = false;
  if (!csv.empty()) cfg.csv_path = csv;

  const velcro::BenchmarkResult res = velcro::run_benchmark(cfg);
  if (!cfg.csv_path.empty()) {
    std::ofstream os(cfg.csv_path);
    if (!os) throw std::runtime_error("cannot open CSV output: " + cfg.csv_path);
    velcro::write_csv(os, res.rows);
    if (!os) throw std::runtime_error("failed writing CSV output: " + cfg.csv_path);
  }
  if (!summary_csv.empty()) {
    std::ofstream os(summary_csv);
    if (!os) throw std::runtime_error("cannot open summary output: " + summary_csv);
    velcro::write_summary_csv(os, res.summary);
  }
  velcro::print_summary(std::cout, res.summary);
  return 0;
}

int run_one(const CommonOptions& o, const std::string& shape, int index,
            const std::string& controller, const std::string& out, int snapshot) {
  velcro::BenchmarkConfig cfg = resolve(o);
  if (snapshot >= 0) cfg.episode.controller.snapshot_particles = snapshot;
  velcro::EpisodeResult res;
  const velcro::EpisodeRow row =
      velcro::run_single(cfg, velcro::parse_shape(shape), velcro::parse_controller(controller),
                         index, nullptr, &res);
  if (!out.empty()) velcro::dump_trajectory(out, res.trajectory);
  const velcro::SurfaceCurve curve = velcro::sample_curve(row.shape, row.seed, cfg.sampling);
  std::cout << "curve: " << velcro::to_json(curve).dump() << '\n';
  std::cout << velcro::kCsvHeader << '\n';
  velcro::write_csv_row(std::cout, row);
  return 0;
}

int run_sample(const CommonOptions& o, const std::string& shape, int count) {
  const velcro::BenchmarkConfig cfg = resolve(o);
  const velcro::ShapeKind kind = velcro::parse_shape(shape);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = velcro::episode_seed(cfg.base_seed, kind, i);
    nlohmann::json j = velcro::to_json(velcro::sample_curve(kind, seed, cfg.sampling));
    j["episode_index"] = i;
    j["seed"] = seed;
    std::cout << j.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Velcro peeling simulator and benchmark"};
  app.require_subcommand(1);

  CommonOptions bench_opts, run_opts, sample_opts;
  std::string csv, summary_csv;
  bool no_timing = false;
  auto* bench = app.add_subcommand("bench", "Run the cost and success-rate benchmark");
  add_common(bench, bench_opts);
  bench->add_option("--episodes", bench_opts.episodes, "Episodes per shape");
  bench->add_option("--shapes", bench_opts.shapes, "Comma list of flat, arc, corner");
  bench->add_option("--controllers", bench_opts.controllers, "Comma list of full_obs, heuristic");
  bench->add_option("--threads", bench_opts.threads, "Worker threads (0: all cores)");
  bench->add_option("--csv", csv, "Per-episode CSV output");
  bench->add_option("--summary-csv", summary_csv, "Summary CSV output");
  bench->add_flag("--no-timing", no_timing, "Write wall_ms as 0 for reproducible output");

  std::string shape = "flat", controller = "heuristic", out;
  int index = 0, snapshot = -1;
  auto* run = app.add_subcommand("run", "Run one episode and dump its trajectory");
  add_common(run, run_opts);
  run->add_option("--shape", shape, "flat, arc or corner");
  run->add_option("--index", index, "Episode index within the shape");
  run->add_option("--controller", controller, "full_obs or heuristic");
  run->add_option("-o,--out", out, "Trajectory JSONL output");
  run->add_option("--snapshot", snapshot, "Particles kept per record");

  int count = 10;
  std::string sample_shape = "flat";
  auto* sample = app.add_subcommand("sample", "Print generated surface curves as JSON lines");
  add_common(sample, sample_opts);
  sample->add_option("--shape", sample_shape, "flat, arc or corner");
  sample->add_option("--count", count, "Number of curves");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*bench) return run_bench(bench_opts, csv, summary_csv, no_timing);
    if (*run) return run_one(run_opts, shape, index, controller, out, snapshot);
    if (*sample) return run_sample(sample_opts, sample_shape, count);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
