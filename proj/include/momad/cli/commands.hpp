#pragma once

// Implementation of the `momad` subcommands. Each returns a process exit
// code: 0 ok, 2 configuration error, 3 I/O failure, 4 corrupt data.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <initializer_list>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "momad/curation.hpp"
#include "momad/error.hpp"
#include "momad/io/json.hpp"
#include "momad/metrics.hpp"
#include "momad/sim/closed_loop.hpp"

namespace momad::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kDataError = 4 };

class IoError : public Error {
 public:
  using Error::Error;
};

[[nodiscard]] inline std::shared_ptr<spdlog::logger> logger() {
  static const auto lg = [] {
    auto l = spdlog::get("momad");
    if (!l) l = spdlog::stderr_color_mt("momad");
    l->set_pattern("momad: %l: %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return lg;
}

// MOMAD_LOG_LEVEL in {error, warn, info, debug}; anything else keeps warn.
inline void configure_logging() {
  const char* env = std::getenv("MOMAD_LOG_LEVEL");
  if (env == nullptr) return;
  const std::string level(env);
  if (level == "error") logger()->set_level(spdlog::level::err);
  if (level == "warn") logger()->set_level(spdlog::level::warn);
  if (level == "info") logger()->set_level(spdlog::level::info);
  if (level == "debug") logger()->set_level(spdlog::level::debug);
}

// Command-line values; set ones win over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> protocol;
  std::optional<std::string> distance;
  std::optional<std::size_t> history_depth;
  std::optional<double> ns;
  std::optional<double> epsilon;
  std::optional<std::string> out;
};

// Everything a run or compare invocation needs, validated.
struct RunConfig {
  sim::ScenarioSpec scenario;
  sim::SimConfig sim;
  sim::PlannerConfig planner;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out{"momad_out"};
  std::optional<WeightBundle> weights;
};

namespace detail {

inline void check_keys(const io::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

struct Stats {
  double mean{0.0};
  double std{0.0};
};

// Sample standard deviation; 0 for fewer than two values.
inline Stats stats(const std::vector<double>& v) {
  MeanAccumulator acc;
  for (double x : v) acc.add(x);
  Stats s{acc.mean(), 0.0};
  if (v.size() > 1) {
    MeanAccumulator sq;
    for (double x : v) sq.add((x - s.mean) * (x - s.mean));
    s.std = std::sqrt(sq.mean() * static_cast<double>(v.size()) / static_cast<double>(v.size() - 1));
  }
  return s;
}

// (metric, horizon label) -> value, in CSV row order.
inline std::vector<std::pair<std::pair<std::string, std::string>, double>> report_rows(const MetricReport& r) {
  std::vector<std::pair<std::pair<std::string, std::string>, double>> rows;
  auto add = [&](const char* name, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) rows.push_back({{name, format_double(r.horizons[i])}, values[i]});
  };
  add("l2", r.l2);
  add("collision_rate", r.collision_rate);
  add("tpc", r.tpc);
  rows.push_back({{"min_ade", "all"}, r.min_ade});
  rows.push_back({{"min_fde", "all"}, r.min_fde});
  return rows;
}

inline std::string seed_stem(std::uint64_t seed) { return "seed" + std::to_string(seed); }

}  // namespace detail

// Config file schema (JSON):
//   {"scenario": {kind, radius, angle, duration, speed, dt, obstacles},
//    "sim": {modes, horizon, query_dim, mode_noise, jitter, ns, ego, protocol,
//            horizons, occlusion, weight_seed},
//    "planner": {kind, distance, history_depth, mlp_activation},
//    "seeds": [..], "out": "dir", "weights": "weights.json"}
// Every section and key is optional.
[[nodiscard]] inline RunConfig load_run_config(const std::string& text, const Overrides& ov,
                                               const std::filesystem::path& base_dir = {}) {
  io::json j;
  try {
    j = io::json::parse(text);
  } catch (const io::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    detail::check_keys(j, {"scenario", "sim", "planner", "seeds", "out", "weights"}, "config");
    if (j.contains("scenario")) {
      detail::check_keys(j.at("scenario"), {"kind", "radius", "angle", "duration", "speed", "dt", "obstacles"},
                         "scenario");
      cfg.scenario = io::spec_from_json(j.at("scenario"));
    }
    if (j.contains("sim")) {
      detail::check_keys(j.at("sim"),
                         {"modes", "horizon", "query_dim", "mode_noise", "jitter", "ns", "ego", "protocol", "horizons",
                          "occlusion", "weight_seed"},
                         "sim");
      cfg.sim = io::sim_config_from_json(j.at("sim"));
    }
    if (j.contains("planner")) {
      detail::check_keys(j.at("planner"), {"kind", "distance", "history_depth", "mlp_activation"}, "planner");
      cfg.planner = io::planner_from_json(j.at("planner"));
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("weights")) {
      std::filesystem::path wp = j.at("weights").get<std::string>();
      if (wp.is_relative()) wp = base_dir / wp;
      try {
        cfg.weights = io::weights_from_json(io::json::parse(detail::read_file(wp)));
      } catch (const io::json::exception& e) {
        throw ConfigError("weight file '" + wp.string() + "' is not valid JSON: " + e.what());
      } catch (const DataError& e) {
        throw ConfigError("weight file '" + wp.string() + "': " + e.what());
      }
    }
  } catch (const io::json::exception& e) {
    throw ConfigError(std::string("config has a wrong value type: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  if (ov.seed) cfg.seeds = {*ov.seed};
  if (ov.protocol) cfg.sim.protocol = parse_protocol(*ov.protocol);
  if (ov.distance) cfg.planner.distance = io::parse_distance(*ov.distance);
  if (ov.history_depth) cfg.planner.history_depth = *ov.history_depth;
  if (ov.ns) cfg.sim.ns = *ov.ns;
  if (ov.out) cfg.out = *ov.out;

  if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");
  cfg.scenario.validate();
  cfg.sim.validate(cfg.scenario.dt);
  cfg.planner.validate();
  const auto n = static_cast<std::size_t>(std::llround(cfg.scenario.duration / cfg.scenario.dt));
  if (n < cfg.sim.horizon) throw ConfigError("scenario duration is shorter than the planning horizon");
  if (cfg.weights) {
    MpiDims d;
    try {
      d = cfg.weights->dims();
    } catch (const ShapeError& e) {
      throw ConfigError(std::string("weight bundle: ") + e.what());
    }
    if (d.query_dim != cfg.sim.query_dim || d.horizon != static_cast<Eigen::Index>(cfg.sim.horizon)) {
      throw ConfigError("weight bundle dimensions do not match the sim config");
    }
  }
  return cfg;
}

// Runs one planner over every seed, in parallel; results come back in seed order.
[[nodiscard]] inline std::vector<sim::RunResult> run_seeds(const RunConfig& cfg, const sim::PlannerConfig& planner) {
  std::vector<std::future<sim::RunResult>> jobs;
  for (std::uint64_t seed : cfg.seeds) {
    jobs.push_back(std::async(std::launch::async, [&cfg, &planner, seed] {
      sim::ScenarioSpec spec = cfg.scenario;
      spec.seed = seed;
      return sim::run_closed_loop(spec, cfg.sim, planner, cfg.weights);
    }));
  }
  std::vector<sim::RunResult> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

[[nodiscard]] inline std::string aggregate_csv(const std::vector<MetricReport>& reports) {
  std::string csv = "metric,horizon_s,mean,std,n\n";
  if (reports.empty()) return csv;
  const auto first = detail::report_rows(reports.front());
  for (std::size_t r = 0; r < first.size(); ++r) {
    std::vector<double> values;
    for (const auto& rep : reports) values.push_back(detail::report_rows(rep)[r].second);
    const auto s = detail::stats(values);
    csv += first[r].first.first + "," + first[r].first.second + "," + format_double(s.mean) + "," +
           format_double(s.std) + "," + std::to_string(values.size()) + "\n";
  }
  return csv;
}

template <typename Fn>
[[nodiscard]] int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    logger()->error("configuration error: {}", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    logger()->error("I/O error: {}", e.what());
    return kIoError;
  } catch (const DataError& e) {
    logger()->error("corrupt data: {}", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kConfigError;
  }
}

// Writes log_seed<S>.jsonl and report_seed<S>.csv per seed, plus
// aggregate.csv when more than one seed ran.
[[nodiscard]] inline int cmd_run(const std::filesystem::path& config_path, const Overrides& ov) {
  return guarded([&] {
    std::string text;
    try {
      text = detail::read_file(config_path);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    const RunConfig cfg = load_run_config(text, ov, config_path.parent_path());
    logger()->info("running {} seed(s) of the {} planner", cfg.seeds.size(), io::planner_name(cfg.planner.kind));
    const auto results = run_seeds(cfg, cfg.planner);

    detail::ensure_dir(cfg.out);
    std::vector<MetricReport> reports;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string stem = detail::seed_stem(cfg.seeds[i]);
      std::ostringstream log;
      io::write_log(log, results[i].log);
      detail::write_file(cfg.out / ("log_" + stem + ".jsonl"), log.str());
      detail::write_file(cfg.out / ("report_" + stem + ".csv"), to_csv(results[i].report));
      reports.push_back(results[i].report);
    }
    if (results.size() > 1) detail::write_file(cfg.out / "aggregate.csv", aggregate_csv(reports));
    logger()->info("wrote outputs to {}", cfg.out.string());
    return int{kOk};
  });
}

// Recomputes the metric report of each log. Without --out the CSV goes to
// `out`; with several logs each report is preceded by a "# <path>" line.
[[nodiscard]] inline int cmd_eval(const std::vector<std::filesystem::path>& logs, const Overrides& ov,
                                  std::ostream& out) {
  return guarded([&] {
    if (logs.empty()) throw ConfigError("no log files given");
    std::optional<L2Protocol> protocol;
    if (ov.protocol) protocol = parse_protocol(*ov.protocol);
    if (ov.out) detail::ensure_dir(*ov.out);
    for (const auto& path : logs) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot open log '" + path.string() + "'");
      sim::ScenarioLog log;
      try {
        log = io::read_log(in);
      } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
      }
      if (in.bad()) throw IoError("cannot read log '" + path.string() + "'");
      MetricReport report;
      try {
        report = sim::evaluate_log(log, protocol.value_or(log.config.protocol));
      } catch (const Error& e) {
        throw DataError(path.string() + ": " + e.what());
      }
      const std::string csv = to_csv(report);
      if (ov.out) {
        detail::write_file(std::filesystem::path(*ov.out) / (path.stem().string() + ".eval.csv"), csv);
      } else {
        if (logs.size() > 1) out << "# " << path.string() << '\n';
        out << csv;
      }
    }
    return int{kOk};
  });
}

// Writes curated.jsonl (retained samples, input order) and scenes.txt (one
// scene id per line) into the output directory.
[[nodiscard]] inline int cmd_curate(const std::filesystem::path& input, const Overrides& ov) {
  return guarded([&] {
    const double epsilon = ov.epsilon.value_or(kDefaultTurnEpsilon);
    if (!std::isfinite(epsilon) || epsilon < 0.0) throw ConfigError("epsilon must be finite and non-negative");
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot open '" + input.string() + "'");
    std::vector<SampleRecord> samples;
    try {
      samples = io::read_samples(in);
    } catch (const DataError& e) {
      throw DataError(input.string() + ": " + e.what());
    }
    const CurationResult result = curate(samples, epsilon);
    const std::filesystem::path dir = ov.out.value_or(".");
    detail::ensure_dir(dir);
    std::string lines;
    for (const auto& s : result.samples) lines += io::to_json(s).dump() + "\n";
    detail::write_file(dir / "curated.jsonl", lines);
    std::string scenes;
    for (const auto& id : result.scene_ids) scenes += id + "\n";
    detail::write_file(dir / "scenes.txt", scenes);
    logger()->info("kept {} of {} samples from {} scene(s), epsilon {}", result.samples.size(), samples.size(),
                   result.scene_ids.size(), epsilon);
    return int{kOk};
  });
}

struct CompareResult {
  std::vector<sim::RunResult> oneshot;
  std::vector<sim::RunResult> momentum;
};

// Paired runs on identical seeds. The momentum side uses the configured
// planner settings (forced to the momentum kind).
[[nodiscard]] inline CompareResult run_compare(const RunConfig& cfg) {
  sim::PlannerConfig mom = cfg.planner;
  mom.kind = sim::PlannerKind::Momentum;
  return {run_seeds(cfg, sim::PlannerConfig::oneshot()), run_seeds(cfg, mom)};
}

// Writes paired.csv (seed,planner,metric,horizon_s,value) and summary.csv
// (planner,metric,horizon_s,mean,std,n).
[[nodiscard]] inline int cmd_compare(const std::filesystem::path& config_path, const Overrides& ov) {
  return guarded([&] {
    std::string text;
    try {
      text = detail::read_file(config_path);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    const RunConfig cfg = load_run_config(text, ov, config_path.parent_path());
    const CompareResult res = run_compare(cfg);

    std::string paired = "seed,planner,metric,horizon_s,value\n";
    std::string summary = "planner,metric,horizon_s,mean,std,n\n";
    for (const auto& [name, runs] : {std::pair<const char*, const std::vector<sim::RunResult>*>{"oneshot", &res.oneshot},
                                     {"momentum", &res.momentum}}) {
      std::vector<MetricReport> reports;
      for (std::size_t i = 0; i < runs->size(); ++i) {
        for (const auto& [key, value] : detail::report_rows((*runs)[i].report)) {
          paired += std::to_string(cfg.seeds[i]) + "," + name + "," + key.first + "," + key.second + "," +
                    format_double(value) + "\n";
        }
        reports.push_back((*runs)[i].report);
      }
      std::istringstream agg(aggregate_csv(reports));
      std::string line;
      std::getline(agg, line);  // header
      while (std::getline(agg, line)) summary += std::string(name) + "," + line + "\n";
    }
    detail::ensure_dir(cfg.out);
    detail::write_file(cfg.out / "paired.csv", paired);
    detail::write_file(cfg.out / "summary.csv", summary);
    return int{kOk};
  });
}

}  // namespace momad::cli
