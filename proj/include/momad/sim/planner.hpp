#pragma once

// One-shot (argmax score) and momentum-aware planning steps.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "momad/error.hpp"
#include "momad/interactor.hpp"
#include "momad/matching.hpp"
#include "momad/trajectory.hpp"
#include "momad/trajectory_set.hpp"

namespace momad::sim {

[[nodiscard]] inline std::size_t step_oneshot(const TrajectorySet& proposals) {
  if (proposals.empty()) throw EmptyInputError("no proposals to choose from");
  proposals.validate();
  return argmax_score(proposals.scores);
}

// What the momentum planner remembers about one past frame.
struct PlanMemory {
  Trajectory chosen;  // in that frame's ego coordinates
  QueryBatch queries;
  Pose2 ego_pose;     // world pose of that frame
};

struct MomentumStep {
  std::size_t index{0};                    // into `refined`
  std::optional<std::size_t> ttm_index;    // absent on the one-shot fallback
  std::vector<Trajectory> refined;
  std::vector<double> refined_scores;
  Trajectory chosen;
};

struct MomentumOptions {
  DistanceKind distance{DistanceKind::Hausdorff};
  MpiOptions mpi{};
};

// `history` holds past frames oldest first. With no history the step falls
// back to the one-shot choice on the raw proposals. Otherwise TTM picks the
// candidate closest to the most recent chosen trajectory, its query attends
// over the mixed history queries, and the plan head regenerates K
// trajectories as offsets around the TTM-selected candidate; the refined
// candidate with the highest score is returned. `frame_delta` is the pose of
// the current ego frame in the most recent history frame.
[[nodiscard]] inline MomentumStep step_momentum(const TrajectorySet& proposals, std::span<const PlanMemory> history,
                                                const Pose2& frame_delta, const WeightBundle& weights,
                                                const Matrix& instance_features, const MomentumOptions& opts = {}) {
  const std::size_t oneshot = step_oneshot(proposals);
  MomentumStep out{oneshot, std::nullopt, {}, {}, proposals.candidates[oneshot]};
  if (history.empty()) {
    out.refined = proposals.candidates;
    out.refined_scores = proposals.scores;
    return out;
  }
  if (!proposals.has_queries()) throw ShapeError("momentum planning needs per-candidate queries");

  const std::size_t k_star = ttm_select(proposals, history.back().chosen, frame_delta, opts.distance);
  std::vector<QueryBatch> batches;
  batches.reserve(history.size());
  for (const auto& h : history) batches.push_back(h.queries);
  const Vector selected = proposals.queries.row(static_cast<Eigen::Index>(k_star)).transpose();
  const PlanOutput plan = mpi_forward(selected, batches, instance_features, weights, opts.mpi);

  const Trajectory& anchor = proposals.candidates[k_star];
  if (plan.trajectories.cols() != static_cast<Eigen::Index>(2 * anchor.size())) {
    throw ShapeError("plan head horizon does not match the proposal length");
  }
  out.ttm_index = k_star;
  out.refined.reserve(static_cast<std::size_t>(plan.trajectories.rows()));
  for (Eigen::Index k = 0; k < plan.trajectories.rows(); ++k) {
    std::vector<Waypoint> pts(anchor.size());
    for (std::size_t i = 0; i < anchor.size(); ++i) {
      pts[i] = {anchor[i].x + plan.trajectories(k, static_cast<Eigen::Index>(2 * i)),
                anchor[i].y + plan.trajectories(k, static_cast<Eigen::Index>(2 * i + 1))};
    }
    out.refined.emplace_back(std::move(pts), anchor.dt());
  }
  out.refined_scores.assign(plan.scores.data(), plan.scores.data() + plan.scores.size());
  out.index = argmax_score(out.refined_scores);
  out.chosen = out.refined[out.index];
  return out;
}

}  // namespace momad::sim
