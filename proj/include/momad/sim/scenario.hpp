#pragma once

// Desk-scale driving scenarios: an analytic ground-truth ego path sampled at
// fixed dt plus scripted obstacle boxes.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "momad/collision.hpp"
#include "momad/error.hpp"
#include "momad/trajectory.hpp"

namespace momad::sim {

enum class ScenarioKind { Straight, ArcTurn, SCurve };

[[nodiscard]] inline std::string_view kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Straight:
      return "straight";
    case ScenarioKind::ArcTurn:
      return "arc_turn";
    case ScenarioKind::SCurve:
      return "s_curve";
  }
  return "straight";
}

[[nodiscard]] inline ScenarioKind parse_kind(std::string_view name) {
  if (name == "straight") return ScenarioKind::Straight;
  if (name == "arc_turn") return ScenarioKind::ArcTurn;
  if (name == "s_curve") return ScenarioKind::SCurve;
  throw ConfigError("unknown scenario kind '" + std::string(name) + "'");
}

// Constant-velocity obstacle; `initial` is its box at t = 0.
struct ObstacleScript {
  ObstacleBox initial;
  Waypoint velocity{};

  friend bool operator==(const ObstacleScript& a, const ObstacleScript& b) {
    return a.initial.center == b.initial.center && a.initial.heading == b.initial.heading &&
           a.initial.length == b.initial.length && a.initial.width == b.initial.width && a.velocity == b.velocity;
  }
};

// ArcTurn: left turn of `angle` on `radius`, then straight along the exit
// tangent. SCurve: left arc of `angle`, right arc of `angle`, then straight.
// The ego starts at the origin heading +x.
struct ScenarioSpec {
  ScenarioKind kind{ScenarioKind::Straight};
  double radius{20.0};
  double angle{1.5707963267948966};
  double duration{3.0};
  double speed{10.0};
  double dt{kDefaultDt};
  std::vector<ObstacleScript> obstacles;
  std::uint64_t seed{0};

  void validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("scenario duration must be positive");
    if (!(speed > 0.0) || !std::isfinite(speed)) throw ConfigError("scenario speed must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("scenario dt must be positive");
    if (kind != ScenarioKind::Straight) {
      if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("turn radius must be positive");
      if (!(angle > 0.0) || !std::isfinite(angle)) throw ConfigError("turn angle must be positive");
    }
    const double steps = duration / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 || std::round(steps) < 1.0) {
      throw ConfigError("scenario duration must be a positive multiple of dt");
    }
    for (const auto& o : obstacles) {
      try {
        o.initial.validate();
      } catch (const DomainError& e) {
        throw ConfigError(std::string("obstacle: ") + e.what());
      }
      if (!o.velocity.finite()) throw ConfigError("obstacle velocity must be finite");
    }
  }

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct PathSample {
  Waypoint position;
  double heading{0.0};
};

namespace detail {

inline PathSample left_arc(Waypoint start, double heading0, double radius, double s) {
  const double th = heading0 + s / radius;
  // center = start + radius * left normal
  const Waypoint c{start.x - radius * std::sin(heading0), start.y + radius * std::cos(heading0)};
  return {{c.x + radius * std::sin(th), c.y - radius * std::cos(th)}, th};
}

inline PathSample right_arc(Waypoint start, double heading0, double radius, double s) {
  const double th = heading0 - s / radius;
  const Waypoint c{start.x + radius * std::sin(heading0), start.y - radius * std::cos(heading0)};
  return {{c.x - radius * std::sin(th), c.y + radius * std::cos(th)}, th};
}

inline PathSample straight(PathSample from, double s) {
  return {{from.position.x + s * std::cos(from.heading), from.position.y + s * std::sin(from.heading)}, from.heading};
}

}  // namespace detail

// Ground-truth ego position and heading after travelling arc length `s`.
[[nodiscard]] inline PathSample path_at(const ScenarioSpec& spec, double s) {
  const PathSample origin{{0.0, 0.0}, 0.0};
  switch (spec.kind) {
    case ScenarioKind::Straight:
      return detail::straight(origin, s);
    case ScenarioKind::ArcTurn: {
      const double arc = spec.radius * spec.angle;
      if (s <= arc) return detail::left_arc(origin.position, 0.0, spec.radius, s);
      return detail::straight(detail::left_arc(origin.position, 0.0, spec.radius, arc), s - arc);
    }
    case ScenarioKind::SCurve: {
      const double arc = spec.radius * spec.angle;
      if (s <= arc) return detail::left_arc(origin.position, 0.0, spec.radius, s);
      const PathSample mid = detail::left_arc(origin.position, 0.0, spec.radius, arc);
      if (s <= 2.0 * arc) return detail::right_arc(mid.position, mid.heading, spec.radius, s - arc);
      return detail::straight(detail::right_arc(mid.position, mid.heading, spec.radius, arc), s - 2.0 * arc);
    }
  }
  return origin;
}

struct GroundTruth {
  Trajectory path;                     // world frame, waypoint i at time (i + 1) dt
  std::vector<Pose2> poses;            // ego pose at time i dt, i = 0..path.size()
  std::vector<ObstacleTrack> obstacles;  // box i at time (i + 1) dt
};

[[nodiscard]] inline GroundTruth gen_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration / spec.dt));
  std::vector<Waypoint> pts;
  std::vector<Pose2> poses;
  poses.push_back(Pose2::identity());
  for (std::size_t i = 1; i <= n; ++i) {
    const PathSample p = path_at(spec, spec.speed * spec.dt * static_cast<double>(i));
    pts.push_back(p.position);
    poses.push_back(Pose2::from_heading(p.heading, p.position));
  }
  std::vector<ObstacleTrack> tracks;
  for (const auto& o : spec.obstacles) {
    ObstacleTrack t;
    for (std::size_t i = 1; i <= n; ++i) {
      ObstacleBox b = o.initial;
      const double time = spec.dt * static_cast<double>(i);
      b.center = o.initial.center + time * o.velocity;
      t.boxes.push_back(b);
    }
    tracks.push_back(std::move(t));
  }
  return {Trajectory(std::move(pts), spec.dt), std::move(poses), std::move(tracks)};
}

}  // namespace momad::sim
