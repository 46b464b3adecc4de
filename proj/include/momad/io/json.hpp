#pragma once

// JSON / JSONL encodings. Doubles are written in shortest round-trip form so
// every document parses back to bit-identical values.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "momad/collision.hpp"
#include "momad/curation.hpp"
#include "momad/error.hpp"
#include "momad/interactor.hpp"
#include "momad/matching.hpp"
#include "momad/metrics.hpp"
#include "momad/sim/closed_loop.hpp"
#include "momad/trajectory.hpp"

namespace momad::io {

using json = nlohmann::json;

// --- trajectories and poses ------------------------------------------------

[[nodiscard]] inline json point_json(Waypoint p) { return json::array({p.x, p.y}); }

[[nodiscard]] inline Waypoint point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("point must be a two-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

[[nodiscard]] inline json points_json(const Trajectory& t) {
  json pts = json::array();
  for (const auto& p : t) pts.push_back(point_json(p));
  return pts;
}

[[nodiscard]] inline std::vector<Waypoint> points_from_json(const json& j) {
  if (!j.is_array()) throw DataError("points must be an array");
  std::vector<Waypoint> pts;
  pts.reserve(j.size());
  for (const auto& p : j) pts.push_back(point_from_json(p));
  return pts;
}

[[nodiscard]] inline json to_json(const Trajectory& t) { return {{"dt", t.dt()}, {"points", points_json(t)}}; }

[[nodiscard]] inline Trajectory trajectory_from_json(const json& j) {
  return Trajectory(points_from_json(j.at("points")), j.at("dt").get<double>());
}

[[nodiscard]] inline json to_json(const Pose2& p) {
  return {{"rotation", json::array({json::array({p.r(0, 0), p.r(0, 1)}), json::array({p.r(1, 0), p.r(1, 1)})})},
          {"translation", point_json(p.translation())}};
}

[[nodiscard]] inline Pose2 pose_from_json(const json& j) {
  const json& r = j.at("rotation");
  return Pose2(r.at(0).at(0).get<double>(), r.at(0).at(1).get<double>(), r.at(1).at(0).get<double>(),
               r.at(1).at(1).get<double>(), point_from_json(j.at("translation")));
}

[[nodiscard]] inline json to_json(const ObstacleBox& b) {
  return {{"center", point_json(b.center)}, {"heading", b.heading}, {"length", b.length}, {"width", b.width}};
}

[[nodiscard]] inline ObstacleBox box_from_json(const json& j) {
  ObstacleBox b{point_from_json(j.at("center")), j.at("heading").get<double>(), j.at("length").get<double>(),
                j.at("width").get<double>()};
  b.validate();
  return b;
}

// --- weights ----------------------------------------------------------------

// name -> {"shape": [r, c], "data": row-major values}
[[nodiscard]] inline json to_json(const WeightBundle& w) {
  json out = json::object();
  for (const auto& [name, m] : w.entries()) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    out[name] = {{"shape", json::array({m.rows(), m.cols()})}, {"data", std::move(data)}};
  }
  return out;
}

[[nodiscard]] inline WeightBundle weights_from_json(const json& j) {
  if (!j.is_object()) throw DataError("weight file must hold a JSON object");
  WeightBundle w;
  for (const auto& [name, entry] : j.items()) {
    const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    const json& data = entry.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
      throw DataError("weight '" + name + "' data length does not match its shape");
    }
    Matrix m(rows, cols);
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(idx++).get<double>();
    }
    w.set(name, std::move(m));
  }
  try {
    (void)w.dims();
  } catch (const ShapeError& e) {
    throw DataError(e.what());
  }
  return w;
}

// --- enums ------------------------------------------------------------------

[[nodiscard]] inline std::string distance_name(DistanceKind k) {
  return k == DistanceKind::Hausdorff ? "hausdorff" : "euclidean";
}

[[nodiscard]] inline DistanceKind parse_distance(const std::string& s) {
  if (s == "hausdorff") return DistanceKind::Hausdorff;
  if (s == "euclidean") return DistanceKind::MeanEuclidean;
  throw ConfigError("unknown distance '" + s + "' (expected hausdorff or euclidean)");
}

[[nodiscard]] inline std::string activation_name(MlpActivation a) {
  switch (a) {
    case MlpActivation::Identity:
      return "identity";
    case MlpActivation::Relu:
      return "relu";
    case MlpActivation::Tanh:
      return "tanh";
  }
  return "identity";
}

[[nodiscard]] inline MlpActivation parse_activation(const std::string& s) {
  if (s == "identity") return MlpActivation::Identity;
  if (s == "relu") return MlpActivation::Relu;
  if (s == "tanh") return MlpActivation::Tanh;
  throw ConfigError("unknown MLP activation '" + s + "'");
}

[[nodiscard]] inline std::string planner_name(sim::PlannerKind k) {
  return k == sim::PlannerKind::OneShot ? "oneshot" : "momentum";
}

[[nodiscard]] inline sim::PlannerKind parse_planner(const std::string& s) {
  if (s == "oneshot") return sim::PlannerKind::OneShot;
  if (s == "momentum") return sim::PlannerKind::Momentum;
  throw ConfigError("unknown planner '" + s + "' (expected oneshot or momentum)");
}

// --- simulation configuration --------------------------------------------

[[nodiscard]] inline json to_json(const sim::ScenarioSpec& s) {
  json obstacles = json::array();
  for (const auto& o : s.obstacles) {
    json b = to_json(o.initial);
    b["velocity"] = point_json(o.velocity);
    obstacles.push_back(std::move(b));
  }
  return {{"kind", std::string(sim::kind_name(s.kind))},
          {"radius", s.radius},
          {"angle", s.angle},
          {"duration", s.duration},
          {"speed", s.speed},
          {"dt", s.dt},
          {"seed", s.seed},
          {"obstacles", std::move(obstacles)}};
}

// Missing keys keep `base` values; present keys must have the right type.
[[nodiscard]] inline sim::ScenarioSpec spec_from_json(const json& j, sim::ScenarioSpec base = {}) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  if (j.contains("kind")) base.kind = sim::parse_kind(j.at("kind").get<std::string>());
  if (j.contains("radius")) base.radius = j.at("radius").get<double>();
  if (j.contains("angle")) base.angle = j.at("angle").get<double>();
  if (j.contains("duration")) base.duration = j.at("duration").get<double>();
  if (j.contains("speed")) base.speed = j.at("speed").get<double>();
  if (j.contains("dt")) base.dt = j.at("dt").get<double>();
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("obstacles")) {
    base.obstacles.clear();
    for (const auto& o : j.at("obstacles")) {
      sim::ObstacleScript s{box_from_json(o), o.contains("velocity") ? point_from_json(o.at("velocity")) : Waypoint{}};
      base.obstacles.push_back(s);
    }
  }
  return base;
}

[[nodiscard]] inline json to_json(const sim::SimConfig& c) {
  return {{"modes", c.modes},
          {"horizon", c.horizon},
          {"query_dim", c.query_dim},
          {"mode_noise", c.mode_noise},
          {"jitter", c.jitter},
          {"ns", c.ns},
          {"ego", {{"length", c.ego.length}, {"width", c.ego.width}}},
          {"protocol", std::string(protocol_name(c.protocol))},
          {"horizons", c.horizons},
          {"occlusion",
           {{"enabled", c.occlusion.enabled},
            {"start_frame", c.occlusion.start_frame},
            {"end_frame", c.occlusion.end_frame},
            {"mode", c.occlusion.mode == sim::OcclusionMode::Flatten ? "flatten" : "swap"}}},
          {"weight_seed", c.weight_seed}};
}

[[nodiscard]] inline sim::SimConfig sim_config_from_json(const json& j, sim::SimConfig base = {}) {
  if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
  if (j.contains("modes")) base.modes = j.at("modes").get<std::size_t>();
  if (j.contains("horizon")) base.horizon = j.at("horizon").get<std::size_t>();
  if (j.contains("query_dim")) base.query_dim = j.at("query_dim").get<Eigen::Index>();
  if (j.contains("mode_noise")) base.mode_noise = j.at("mode_noise").get<double>();
  if (j.contains("jitter")) base.jitter = j.at("jitter").get<double>();
  if (j.contains("ns")) base.ns = j.at("ns").get<double>();
  if (j.contains("ego")) {
    base.ego.length = j.at("ego").value("length", base.ego.length);
    base.ego.width = j.at("ego").value("width", base.ego.width);
  }
  if (j.contains("protocol")) base.protocol = parse_protocol(j.at("protocol").get<std::string>());
  if (j.contains("horizons")) base.horizons = j.at("horizons").get<std::vector<double>>();
  if (j.contains("occlusion")) {
    const json& o = j.at("occlusion");
    base.occlusion.enabled = o.value("enabled", true);
    base.occlusion.start_frame = o.value("start_frame", std::size_t{0});
    base.occlusion.end_frame = o.value("end_frame", std::size_t{0});
    const std::string mode = o.value("mode", std::string("flatten"));
    if (mode != "flatten" && mode != "swap") throw ConfigError("occlusion mode must be flatten or swap");
    base.occlusion.mode = mode == "flatten" ? sim::OcclusionMode::Flatten : sim::OcclusionMode::Swap;
  }
  if (j.contains("weight_seed")) base.weight_seed = j.at("weight_seed").get<std::uint64_t>();
  return base;
}

[[nodiscard]] inline json to_json(const sim::PlannerConfig& p) {
  return {{"kind", planner_name(p.kind)},
          {"distance", distance_name(p.distance)},
          {"history_depth", p.history_depth},
          {"mlp_activation", activation_name(p.mlp_activation)}};
}

[[nodiscard]] inline sim::PlannerConfig planner_from_json(const json& j, sim::PlannerConfig base = {}) {
  if (!j.is_object()) throw ConfigError("planner config must be a JSON object");
  if (j.contains("kind")) base.kind = parse_planner(j.at("kind").get<std::string>());
  if (j.contains("distance")) base.distance = parse_distance(j.at("distance").get<std::string>());
  if (j.contains("history_depth")) base.history_depth = j.at("history_depth").get<std::size_t>();
  if (j.contains("mlp_activation")) base.mlp_activation = parse_activation(j.at("mlp_activation").get<std::string>());
  return base;
}

// --- scenario logs -----------------------------------------------------------

inline constexpr const char* kLogFormat = "momad-log/1";

[[nodiscard]] inline json log_header_json(const sim::ScenarioLog& log) {
  json tracks = json::array();
  for (const auto& t : log.obstacles) {
    json boxes = json::array();
    for (const auto& b : t.boxes) boxes.push_back(to_json(b));
    tracks.push_back(std::move(boxes));
  }
  return {{"type", "header"},       {"format", kLogFormat},         {"seed", log.spec.seed},
          {"spec", to_json(log.spec)}, {"config", to_json(log.config)}, {"planner", to_json(log.planner)},
          {"gt_path", to_json(log.gt_path)}, {"obstacles", std::move(tracks)}};
}

[[nodiscard]] inline json to_json(const sim::FrameRecord& f) {
  json trajs = json::array();
  for (const auto& c : f.proposals.candidates) trajs.push_back(points_json(c));
  const double dt = f.proposals.empty() ? f.chosen_trajectory.dt() : f.proposals.candidates.front().dt();
  return {{"type", "frame"},
          {"index", f.index},
          {"time", f.time},
          {"ego_pose", to_json(f.ego_pose)},
          {"proposals", {{"dt", dt}, {"trajectories", std::move(trajs)}, {"scores", f.proposals.scores}}},
          {"chosen_index", f.chosen_index},
          {"ttm_index", f.ttm_index ? json(*f.ttm_index) : json(nullptr)},
          {"chosen_trajectory", to_json(f.chosen_trajectory)}};
}

[[nodiscard]] inline sim::FrameRecord frame_from_json(const json& j) {
  if (j.at("type").get<std::string>() != "frame") throw DataError("expected a frame record");
  sim::FrameRecord f;
  f.index = j.at("index").get<std::size_t>();
  f.time = j.at("time").get<double>();
  f.ego_pose = pose_from_json(j.at("ego_pose"));
  const json& p = j.at("proposals");
  const double dt = p.at("dt").get<double>();
  for (const auto& t : p.at("trajectories")) f.proposals.candidates.emplace_back(points_from_json(t), dt);
  f.proposals.scores = p.at("scores").get<std::vector<double>>();
  f.proposals.validate();
  f.chosen_index = j.at("chosen_index").get<std::size_t>();
  if (!j.at("ttm_index").is_null()) f.ttm_index = j.at("ttm_index").get<std::size_t>();
  f.chosen_trajectory = trajectory_from_json(j.at("chosen_trajectory"));
  return f;
}

inline void write_log(std::ostream& os, const sim::ScenarioLog& log) {
  os << log_header_json(log).dump() << '\n';
  for (const auto& f : log.frames) os << to_json(f).dump() << '\n';
}

// Throws DataError carrying the 1-based line number of the first bad line.
[[nodiscard]] inline sim::ScenarioLog read_log(std::istream& is) {
  sim::ScenarioLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        if (j.at("type").get<std::string>() != "header" || j.at("format").get<std::string>() != kLogFormat) {
          throw DataError("first record must be a momad-log/1 header");
        }
        log.spec = spec_from_json(j.at("spec"));
        log.spec.seed = j.at("seed").get<std::uint64_t>();
        log.config = sim_config_from_json(j.at("config"));
        log.planner = planner_from_json(j.at("planner"));
        log.gt_path = trajectory_from_json(j.at("gt_path"));
        for (const auto& t : j.at("obstacles")) {
          ObstacleTrack track;
          for (const auto& b : t) track.boxes.push_back(box_from_json(b));
          log.obstacles.push_back(std::move(track));
        }
        have_header = true;
      } else {
        log.frames.push_back(frame_from_json(j));
      }
    } catch (const DataError& e) {
      if (e.line() != 0) throw;
      throw DataError(e.what(), line_no);
    } catch (const std::exception& e) {
      throw DataError(e.what(), line_no);
    }
  }
  if (!have_header) throw DataError("log has no header record", line_no == 0 ? 1 : line_no);
  return log;
}

// --- curation samples -------------------------------------------------------

[[nodiscard]] inline json to_json(const SampleRecord& s) {
  return {{"sample_id", s.sample_id}, {"scene_id", s.scene_id}, {"gt_future", to_json(s.gt_future)}};
}

[[nodiscard]] inline SampleRecord sample_from_json(const json& j) {
  SampleRecord s{j.at("sample_id").get<std::string>(), j.at("scene_id").get<std::string>(),
                 trajectory_from_json(j.at("gt_future"))};
  if (s.gt_future.size() < 6) throw DataError("gt_future must hold at least 6 waypoints");
  return s;
}

[[nodiscard]] inline std::vector<SampleRecord> read_samples(std::istream& is) {
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return out;
}

// --- reports ----------------------------------------------------------------

[[nodiscard]] inline json to_json(const MetricReport& r) {
  return {{"horizons_s", r.horizons}, {"l2", r.l2},           {"collision_rate", r.collision_rate},
          {"tpc", r.tpc},             {"min_ade", r.min_ade}, {"min_fde", r.min_fde}};
}

}  // namespace momad::io
