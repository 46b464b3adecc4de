#pragma once

// Trajectory distances and topological trajectory matching: pick the
// candidate whose waypoint set lies closest to the previously executed plan.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "momad/error.hpp"
#include "momad/trajectory.hpp"
#include "momad/trajectory_set.hpp"

namespace momad {

enum class DistanceKind { Hausdorff, MeanEuclidean };

// max over a of min over b of |p - h|, on the discrete waypoint sets.
[[nodiscard]] inline double directed_hausdorff(std::span<const Waypoint> a, std::span<const Waypoint> b) {
  if (a.empty() || b.empty()) throw EmptyInputError("Hausdorff distance of an empty point set");
  double worst = 0.0;
  for (const auto& p : a) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& h : b) nearest = std::min(nearest, distance(p, h));
    worst = std::max(worst, nearest);
  }
  return worst;
}

[[nodiscard]] inline double directed_hausdorff(const Trajectory& a, const Trajectory& b) {
  return directed_hausdorff(a.points(), b.points());
}

[[nodiscard]] inline double hausdorff(const Trajectory& a, const Trajectory& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

[[nodiscard]] inline double mean_euclidean(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw AlignmentError("mean Euclidean distance needs equal-length trajectories");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += distance(a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

// The Euclidean baseline aligns unequal lengths by resampling both inputs to
// the longer length first.
[[nodiscard]] inline double trajectory_distance(DistanceKind kind, const Trajectory& a, const Trajectory& b) {
  switch (kind) {
    case DistanceKind::Hausdorff:
      return hausdorff(a, b);
    case DistanceKind::MeanEuclidean: {
      if (a.size() == b.size()) return mean_euclidean(a, b);
      const std::size_t n = std::max(a.size(), b.size());
      return mean_euclidean(resample(a, n), resample(b, n));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct MatchResult {
  std::size_t index{0};
  std::vector<double> distances;  // one per candidate; NaN for excluded ones
};

// Transfers every candidate (current ego frame) into the historical frame via
// `frame_delta` (pose of the current frame in the previous one), measures it
// against `history`, and returns the arg-min. Ties go to the lowest index.
// `allowed` restricts the search to a candidate subset (e.g. one command).
[[nodiscard]] inline MatchResult ttm_match(const TrajectorySet& candidates, const Trajectory& history,
                                           const Pose2& frame_delta, DistanceKind kind,
                                           std::optional<std::span<const std::size_t>> allowed = std::nullopt) {
  if (candidates.empty()) throw EmptyInputError("no candidates to match");
  std::vector<std::size_t> all;
  std::span<const std::size_t> pool;
  if (allowed) {
    pool = *allowed;
  } else {
    all.resize(candidates.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    pool = all;
  }
  if (pool.empty()) throw EmptyInputError("candidate subset is empty");

  MatchResult result;
  result.distances.assign(candidates.size(), std::numeric_limits<double>::quiet_NaN());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t k : pool) {
    if (k >= candidates.size()) throw ShapeError("candidate subset index out of range");
    const double d = trajectory_distance(kind, to_previous_frame(candidates.candidates[k], frame_delta), history);
    result.distances[k] = d;
    if (!found || d < best || (d == best && k < result.index)) {
      best = d;
      result.index = k;
      found = true;
    }
  }
  return result;
}

[[nodiscard]] inline std::size_t ttm_select(const TrajectorySet& candidates, const Trajectory& history,
                                            const Pose2& frame_delta, DistanceKind kind = DistanceKind::Hausdorff) {
  return ttm_match(candidates, history, frame_delta, kind).index;
}

}  // namespace momad
