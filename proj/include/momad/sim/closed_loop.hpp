#pragma once

// Receding-horizon closed loop: every dt the planner receives proposals built
// from the remaining ground-truth future, picks a trajectory, and the ego
// executes its first waypoint. Metrics are computed from the log alone so a
// written log replays to the same report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momad/collision.hpp"
#include "momad/error.hpp"
#include "momad/interactor.hpp"
#include "momad/matching.hpp"
#include "momad/metrics.hpp"
#include "momad/sim/planner.hpp"
#include "momad/sim/proposals.hpp"
#include "momad/sim/scenario.hpp"
#include "momad/trajectory.hpp"
#include "momad/trajectory_set.hpp"

namespace momad::sim {

enum class PlannerKind { OneShot, Momentum };

enum class OcclusionMode { Flatten, Swap };

// Scores of frames in [start_frame, end_frame) are corrupted: Flatten makes
// them uniform, Swap reverses their order.
struct OcclusionConfig {
  bool enabled{false};
  std::size_t start_frame{0};
  std::size_t end_frame{0};
  OcclusionMode mode{OcclusionMode::Flatten};

  [[nodiscard]] bool active(std::size_t frame) const noexcept {
    return enabled && frame >= start_frame && frame < end_frame;
  }
  friend bool operator==(const OcclusionConfig&, const OcclusionConfig&) = default;
};

struct PlannerConfig {
  PlannerKind kind{PlannerKind::Momentum};
  DistanceKind distance{DistanceKind::Hausdorff};
  std::size_t history_depth{1};
  MlpActivation mlp_activation{MlpActivation::Identity};

  [[nodiscard]] static PlannerConfig oneshot() { return {PlannerKind::OneShot, DistanceKind::Hausdorff, 0}; }

  void validate() const {
    if (history_depth > 2) throw ConfigError("history depth must be 0, 1 or 2");
  }
  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

struct SimConfig {
  std::size_t modes{6};
  std::size_t horizon{6};
  Eigen::Index query_dim{32};
  double mode_noise{1.0};
  double jitter{0.3};
  double ns{0.1};
  EgoDims ego{};
  L2Protocol protocol{L2Protocol::AtTimestep};
  std::vector<double> horizons{1.0, 2.0, 3.0};
  OcclusionConfig occlusion{};
  std::uint64_t weight_seed{7};

  void validate(double dt) const {
    if (modes < 1) throw ConfigError("modes must be at least one");
    if (horizon < 2) throw ConfigError("planning horizon must be at least two steps");
    if (query_dim < 1) throw ConfigError("query dimension must be positive");
    for (double v : {mode_noise, jitter, ns}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("noise levels must be finite and non-negative");
    }
    if (!(ego.length > 0.0) || !(ego.width > 0.0)) throw ConfigError("ego dimensions must be positive");
    if (horizons.empty()) throw ConfigError("at least one evaluation horizon is required");
    for (double h : horizons) {
      try {
        (void)horizon_steps(h, dt, horizon);
      } catch (const HorizonError& e) {
        throw ConfigError(e.what());
      }
    }
  }

  [[nodiscard]] MpiDims mpi_dims() const {
    return {query_dim, static_cast<Eigen::Index>(modes), static_cast<Eigen::Index>(horizon)};
  }

  friend bool operator==(const SimConfig& a, const SimConfig& b) {
    return a.modes == b.modes && a.horizon == b.horizon && a.query_dim == b.query_dim &&
           a.mode_noise == b.mode_noise && a.jitter == b.jitter && a.ns == b.ns && a.ego.length == b.ego.length &&
           a.ego.width == b.ego.width && a.protocol == b.protocol && a.horizons == b.horizons &&
           a.occlusion == b.occlusion && a.weight_seed == b.weight_seed;
  }
};

struct FrameRecord {
  std::size_t index{0};
  double time{0.0};
  Pose2 ego_pose;               // world pose at planning time
  TrajectorySet proposals;      // world frame; queries are not logged
  std::size_t chosen_index{0};  // into the refined set for momentum frames
  std::optional<std::size_t> ttm_index;
  Trajectory chosen_trajectory{{Waypoint{}}};  // ego frame
};

struct ScenarioLog {
  ScenarioSpec spec;
  SimConfig config;
  PlannerConfig planner;
  Trajectory gt_path{{Waypoint{}}};
  std::vector<ObstacleTrack> obstacles;
  std::vector<FrameRecord> frames;
};

struct RunResult {
  ScenarioLog log;
  MetricReport report;
};

namespace detail {

inline constexpr std::uint64_t kProposalStream = 1;
inline constexpr std::uint64_t kFeatureStream = 2;
inline constexpr std::uint64_t kModeStream = 3;

inline Trajectory slice(const Trajectory& t, std::size_t from, std::size_t count) {
  std::vector<Waypoint> pts(t.begin() + static_cast<std::ptrdiff_t>(from),
                            t.begin() + static_cast<std::ptrdiff_t>(from + count));
  return Trajectory(std::move(pts), t.dt());
}

inline void corrupt_scores(std::vector<double>& scores, OcclusionMode mode) {
  if (mode == OcclusionMode::Flatten) {
    std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(scores.size()));
  } else {
    std::reverse(scores.begin(), scores.end());
  }
}

}  // namespace detail

// Recomputes every metric from a log: L2 and collisions of the chosen
// trajectory against the ground truth, consistency between consecutive
// chosen trajectories, and best-of-K displacement of the proposals.
[[nodiscard]] inline MetricReport evaluate_log(const ScenarioLog& log, L2Protocol protocol) {
  const auto& horizons = log.config.horizons;
  const std::size_t H = horizons.size();
  std::vector<MeanAccumulator> l2(H), col(H), tpc_acc(H);
  MeanAccumulator ade_acc, fde_acc;

  for (std::size_t f = 0; f < log.frames.size(); ++f) {
    const FrameRecord& fr = log.frames[f];
    const std::size_t n = fr.chosen_trajectory.size();
    if (fr.index + n > log.gt_path.size()) throw DataError("frame " + std::to_string(fr.index) + " runs past the ground truth");
    const Trajectory gt_future = detail::slice(log.gt_path, fr.index, n);
    const Trajectory chosen_world = transform_from_frame(fr.chosen_trajectory, fr.ego_pose);

    const auto l2_values = l2_error(chosen_world, gt_future, horizons, protocol);
    std::vector<ObstacleTrack> shifted;
    for (const auto& track : log.obstacles) {
      ObstacleTrack s;
      for (std::size_t i = fr.index; i < track.boxes.size(); ++i) s.boxes.push_back(track.boxes[i]);
      if (s.boxes.empty() && !track.boxes.empty()) s.boxes.push_back(track.boxes.back());
      shifted.push_back(std::move(s));
    }
    const auto hits = collision_flags(chosen_world, log.config.ego, shifted, horizons, fr.ego_pose.heading());
    for (std::size_t h = 0; h < H; ++h) {
      l2[h].add(l2_values[h]);
      col[h].add(hits[h] ? 100.0 : 0.0);
    }

    const AdeFde best = min_ade_fde(fr.proposals, gt_future);
    ade_acc.add(best.ade);
    fde_acc.add(best.fde);

    if (f > 0) {
      const FrameRecord& prev = log.frames[f - 1];
      if (fr.index <= prev.index) throw DataError("frames are not time-ordered");
      const Pose2 delta = relative_pose(prev.ego_pose, fr.ego_pose);
      const OverlapMask mask = overlap_mask(fr.chosen_trajectory, prev.chosen_trajectory, fr.index - prev.index);
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t steps = horizon_steps(horizons[h], fr.chosen_trajectory.dt(), n);
        const auto v = tpc(fr.chosen_trajectory, prev.chosen_trajectory, delta, truncate_mask(mask, steps));
        if (v) tpc_acc[h].add(*v);
      }
    }
  }

  MetricReport report;
  report.horizons = horizons;
  for (std::size_t h = 0; h < H; ++h) {
    report.l2.push_back(l2[h].mean());
    report.collision_rate.push_back(col[h].mean());
    report.tpc.push_back(tpc_acc[h].mean());
  }
  report.min_ade = ade_acc.mean();
  report.min_fde = fde_acc.mean();
  return report;
}

// Weights default to the seeded initialization of `config.weight_seed`.
[[nodiscard]] inline RunResult run_closed_loop(const ScenarioSpec& spec, const SimConfig& config,
                                               const PlannerConfig& planner,
                                               const std::optional<WeightBundle>& weights = std::nullopt) {
  spec.validate();
  config.validate(spec.dt);
  planner.validate();
  const GroundTruth gt = gen_scenario(spec);
  const std::size_t N = config.horizon;
  if (gt.path.size() < N) throw ConfigError("scenario is shorter than the planning horizon");

  const bool momentum = planner.kind == PlannerKind::Momentum && planner.history_depth > 0;
  WeightBundle w;
  if (momentum) {
    w = weights ? *weights : WeightBundle::seeded(config.mpi_dims(), config.weight_seed);
    const MpiDims d = w.dims();
    if (d.query_dim != config.query_dim || d.horizon != static_cast<Eigen::Index>(N)) {
      throw ConfigError("weight bundle dimensions do not match the simulation config");
    }
  }
  const QueryEncoder encoder(config.query_dim, N);
  const MomentumOptions mopts{planner.distance, MpiOptions{planner.mlp_activation}};

  ScenarioLog log{spec, config, planner, gt.path, gt.obstacles, {}};
  std::deque<PlanMemory> memory;
  Pose2 ego = Pose2::identity();
  const std::size_t frames = gt.path.size() - N + 1;
  // Modes persist for the whole scenario; jitter and the score observation
  // are redrawn every frame.
  const auto amplitude = mode_amplitudes(config.modes, config.mode_noise, stream_rng(spec.seed, 0, detail::kModeStream)());
  for (std::size_t j = 0; j < frames; ++j) {
    const Pose2& ref = gt.poses[j];
    const Trajectory gt_future_ref = transform_to_frame(detail::slice(gt.path, j, N), ref);
    TrajectorySet ref_set =
        propose(gt_future_ref, amplitude, config.mode_noise, config.jitter,
                stream_rng(spec.seed, j, detail::kProposalStream)());
    const Matrix queries = perturb_features(encoder.encode(ref_set), config.ns,
                                            stream_rng(spec.seed, j, detail::kFeatureStream)());
    if (config.occlusion.active(j)) detail::corrupt_scores(ref_set.scores, config.occlusion.mode);

    FrameRecord rec;
    rec.index = j;
    rec.time = spec.dt * static_cast<double>(j);
    rec.ego_pose = ego;
    rec.proposals.scores = ref_set.scores;
    TrajectorySet ego_set;
    ego_set.scores = ref_set.scores;
    ego_set.queries = queries;
    for (const auto& c : ref_set.candidates) {
      Trajectory world = transform_from_frame(c, ref);
      ego_set.candidates.push_back(transform_to_frame(world, ego));
      rec.proposals.candidates.push_back(std::move(world));
    }

    if (momentum) {
      std::vector<PlanMemory> hist(memory.begin(), memory.end());
      const Pose2 delta = hist.empty() ? Pose2::identity() : relative_pose(hist.back().ego_pose, ego);
      MomentumStep step = step_momentum(ego_set, hist, delta, w, queries, mopts);
      rec.chosen_index = step.index;
      rec.ttm_index = step.ttm_index;
      rec.chosen_trajectory = std::move(step.chosen);
    } else {
      rec.chosen_index = step_oneshot(ego_set);
      rec.chosen_trajectory = ego_set.candidates[rec.chosen_index];
    }

    if (momentum) {
      Vector scores = Eigen::Map<const Vector>(ego_set.scores.data(), static_cast<Eigen::Index>(ego_set.scores.size()));
      memory.push_back({rec.chosen_trajectory, QueryBatch{queries, std::move(scores)}, ego});
      while (memory.size() > planner.history_depth) memory.pop_front();
    }

    // Execute the first step of the chosen trajectory.
    const Waypoint step = rec.chosen_trajectory[0];
    const double turn = (step.x == 0.0 && step.y == 0.0) ? 0.0 : std::atan2(step.y, step.x);
    const Pose2 next = ego.compose(Pose2::from_heading(turn, step));
    log.frames.push_back(std::move(rec));
    ego = next;
  }

  RunResult result{std::move(log), {}};
  result.report = evaluate_log(result.log, config.protocol);
  return result;
}

}  // namespace momad::sim
