#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "momad/error.hpp"
#include "momad/trajectory.hpp"

namespace momad {

struct ObstacleBox {
  Waypoint center{};
  double heading{0.0};
  double length{1.0};  // along heading
  double width{1.0};

  void validate() const {
    if (!(length > 0.0) || !(width > 0.0)) throw DomainError("box length and width must be positive");
    if (!center.finite() || !std::isfinite(heading)) throw DomainError("box pose must be finite");
  }

  [[nodiscard]] Waypoint axis_long() const noexcept { return {std::cos(heading), std::sin(heading)}; }
  [[nodiscard]] Waypoint axis_lat() const noexcept { return {-std::sin(heading), std::cos(heading)}; }

  [[nodiscard]] std::vector<Waypoint> corners() const {
    const Waypoint u = 0.5 * length * axis_long();
    const Waypoint v = 0.5 * width * axis_lat();
    return {center + u + v, center - u + v, center - u - v, center + u - v};
  }
};

// A box per timestep (index i pairs with trajectory waypoint i). A single box
// is a static obstacle; shorter tracks hold their last box.
struct ObstacleTrack {
  std::vector<ObstacleBox> boxes;

  [[nodiscard]] const ObstacleBox& at(std::size_t step) const {
    if (boxes.empty()) throw EmptyInputError("obstacle track has no boxes");
    return boxes[std::min(step, boxes.size() - 1)];
  }
};

struct EgoDims {
  double length{4.084};
  double width{1.85};
};

// Separating-axis test on the closed rectangles: touching counts as overlap.
[[nodiscard]] inline bool boxes_overlap(const ObstacleBox& a, const ObstacleBox& b) {
  const Waypoint axes[4] = {a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()};
  const Waypoint d = b.center - a.center;
  auto radius = [](const ObstacleBox& box, Waypoint axis) {
    const Waypoint u = box.axis_long();
    const Waypoint v = box.axis_lat();
    return 0.5 * box.length * std::abs(u.x * axis.x + u.y * axis.y) +
           0.5 * box.width * std::abs(v.x * axis.x + v.y * axis.y);
  };
  for (const auto& axis : axes) {
    const double sep = std::abs(d.x * axis.x + d.y * axis.y);
    if (sep > radius(a, axis) + radius(b, axis)) return false;
  }
  return true;
}

// Number of waypoints covered by a horizon of `seconds`.
[[nodiscard]] inline std::size_t horizon_steps(double seconds, double dt, std::size_t length) {
  const double raw = seconds / dt;
  const double steps = std::round(raw);
  if (!(seconds > 0.0) || std::abs(raw - steps) > 1e-9) {
    throw HorizonError("horizon " + std::to_string(seconds) + " s is not a positive multiple of dt");
  }
  if (steps > static_cast<double>(length)) {
    throw HorizonError("horizon " + std::to_string(seconds) + " s exceeds the trajectory");
  }
  return static_cast<std::size_t>(steps);
}

// Ego boxes along `pred` (heading from forward differences).
[[nodiscard]] inline std::vector<ObstacleBox> ego_boxes(const Trajectory& pred, EgoDims ego,
                                                        double fallback_heading = 0.0) {
  const auto headings = waypoint_headings(pred, fallback_heading);
  std::vector<ObstacleBox> boxes;
  boxes.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) boxes.push_back({pred[i], headings[i], ego.length, ego.width});
  return boxes;
}

// Per horizon: does any ego box up to that horizon overlap an obstacle?
// Obstacles must share the trajectory's frame and time base.
[[nodiscard]] inline std::vector<bool> collision_flags(const Trajectory& pred, EgoDims ego,
                                                       std::span<const ObstacleTrack> obstacles,
                                                       std::span<const double> horizons,
                                                       double fallback_heading = 0.0) {
  std::vector<std::size_t> steps;
  for (double h : horizons) steps.push_back(horizon_steps(h, pred.dt(), pred.size()));
  const auto boxes = ego_boxes(pred, ego, fallback_heading);

  std::size_t first_hit = pred.size();
  for (std::size_t i = 0; i < pred.size() && first_hit == pred.size(); ++i) {
    for (const auto& track : obstacles) {
      if (boxes_overlap(boxes[i], track.at(i))) {
        first_hit = i;
        break;
      }
    }
  }
  std::vector<bool> flags;
  for (std::size_t s : steps) flags.push_back(first_hit < s);
  return flags;
}

// Single-sample collision rate in percent (0 or 100 per horizon).
[[nodiscard]] inline std::vector<double> collision_rate(const Trajectory& pred, EgoDims ego,
                                                        std::span<const ObstacleTrack> obstacles,
                                                        std::span<const double> horizons) {
  const auto flags = collision_flags(pred, ego, obstacles, horizons);
  std::vector<double> rate;
  for (bool f : flags) rate.push_back(f ? 100.0 : 0.0);
  return rate;
}

}  // namespace momad
