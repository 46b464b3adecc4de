#pragma once

// Turning-scenario curation: a sample is turning when the x coordinate of its
// future ego trajectory moves by at least epsilon between the first (0.5 s)
// and sixth (3 s) waypoints; every sample of a scene containing a turning
// sample is kept.

#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "momad/error.hpp"
#include "momad/trajectory.hpp"

namespace momad {

inline constexpr double kDefaultTurnEpsilon = 25.0;

struct SampleRecord {
  std::string sample_id;
  std::string scene_id;
  Trajectory gt_future;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Epsilon is compared against raw stored coordinates; no unit conversion.
[[nodiscard]] inline bool is_turning(const Trajectory& gt_future, double epsilon = kDefaultTurnEpsilon) {
  if (gt_future.size() < 6) throw HorizonError("turn test needs at least 6 future waypoints");
  return std::abs(gt_future[0].x - gt_future[5].x) >= epsilon;
}

struct CurationResult {
  std::vector<SampleRecord> samples;    // input order preserved
  std::vector<std::string> scene_ids;   // first-appearance order
};

[[nodiscard]] inline CurationResult curate(const std::vector<SampleRecord>& samples,
                                           double epsilon = kDefaultTurnEpsilon) {
  std::unordered_set<std::string> turning_scenes;
  for (const auto& s : samples) {
    if (is_turning(s.gt_future, epsilon)) turning_scenes.insert(s.scene_id);
  }
  CurationResult out;
  std::unordered_set<std::string> listed;
  for (const auto& s : samples) {
    if (!turning_scenes.count(s.scene_id)) continue;
    out.samples.push_back(s);
    if (listed.insert(s.scene_id).second) out.scene_ids.push_back(s.scene_id);
  }
  return out;
}

}  // namespace momad
