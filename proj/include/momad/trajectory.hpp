#pragma once

// Trajectory and pose data model: SE(2) frame transfer, arc-length
// resampling and temporal-overlap masking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "momad/error.hpp"

namespace momad {

inline constexpr double kDefaultDt = 0.5;

struct Waypoint {
  double x{0.0};
  double y{0.0};

  [[nodiscard]] bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }

  friend Waypoint operator+(Waypoint a, Waypoint b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend Waypoint operator-(Waypoint a, Waypoint b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend Waypoint operator*(double s, Waypoint a) noexcept { return {s * a.x, s * a.y}; }
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

[[nodiscard]] inline double norm(Waypoint v) noexcept { return std::hypot(v.x, v.y); }
[[nodiscard]] inline double distance(Waypoint a, Waypoint b) noexcept { return norm(a - b); }

// Ordered waypoints sampled every `dt` seconds. Waypoint i is the position at
// time (i + 1) * dt relative to the planning instant.
class Trajectory {
 public:
  explicit Trajectory(std::vector<Waypoint> points, double dt = kDefaultDt)
      : points_(std::move(points)), dt_(dt) {
    if (points_.empty()) throw InvalidTrajectoryError("trajectory must hold at least one waypoint");
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidTrajectoryError("trajectory dt must be positive");
    for (const auto& p : points_) {
      if (!p.finite()) throw InvalidTrajectoryError("trajectory waypoint is not finite");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::span<const Waypoint> points() const noexcept { return points_; }
  [[nodiscard]] const Waypoint& operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] const Waypoint& front() const { return points_.front(); }
  [[nodiscard]] const Waypoint& back() const { return points_.back(); }
  [[nodiscard]] auto begin() const noexcept { return points_.begin(); }
  [[nodiscard]] auto end() const noexcept { return points_.end(); }

  [[nodiscard]] double path_length() const noexcept {
    double len = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i) len += distance(points_[i - 1], points_[i]);
    return len;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<Waypoint> points_;
  double dt_;
};

// Rigid 2-D transform. Applied to a point expressed in the child frame it
// yields the point in the parent frame: p_parent = R * p_child + t.
class Pose2 {
 public:
  static constexpr double kOrthoTol = 1e-9;

  Pose2() = default;

  // Row-major rotation entries.
  Pose2(double r00, double r01, double r10, double r11, Waypoint translation)
      : r_{r00, r01, r10, r11}, t_(translation) {
    validate();
  }

  [[nodiscard]] static Pose2 from_heading(double heading, Waypoint translation = {}) {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    return Pose2(c, -s, s, c, translation);
  }

  [[nodiscard]] static Pose2 identity() { return Pose2(); }

  [[nodiscard]] double r(int row, int col) const noexcept { return r_[row * 2 + col]; }
  [[nodiscard]] Waypoint translation() const noexcept { return t_; }
  [[nodiscard]] double heading() const noexcept { return std::atan2(r_[2], r_[0]); }

  // Child frame -> parent frame.
  [[nodiscard]] Waypoint apply(Waypoint p) const noexcept {
    return {r_[0] * p.x + r_[1] * p.y + t_.x, r_[2] * p.x + r_[3] * p.y + t_.y};
  }

  // Parent frame -> child frame: R^T (p - t).
  [[nodiscard]] Waypoint apply_inverse(Waypoint p) const noexcept {
    const Waypoint d = p - t_;
    return {r_[0] * d.x + r_[2] * d.y, r_[1] * d.x + r_[3] * d.y};
  }

  [[nodiscard]] Pose2 inverse() const {
    const Waypoint t = apply_inverse({0.0, 0.0});
    return Pose2(r_[0], r_[2], r_[1], r_[3], t);
  }

  // (*this) o other: first other, then this.
  [[nodiscard]] Pose2 compose(const Pose2& other) const {
    return Pose2(r_[0] * other.r_[0] + r_[1] * other.r_[2], r_[0] * other.r_[1] + r_[1] * other.r_[3],
                 r_[2] * other.r_[0] + r_[3] * other.r_[2], r_[2] * other.r_[1] + r_[3] * other.r_[3],
                 apply(other.t_));
  }

  friend bool operator==(const Pose2&, const Pose2&) = default;

 private:
  void validate() const {
    for (double v : r_) {
      if (!std::isfinite(v)) throw InvalidPoseError("rotation has non-finite entries");
    }
    if (!t_.finite()) throw InvalidPoseError("translation has non-finite entries");
    // R^T R = I and det R = +1
    const double c00 = r_[0] * r_[0] + r_[2] * r_[2];
    const double c01 = r_[0] * r_[1] + r_[2] * r_[3];
    const double c11 = r_[1] * r_[1] + r_[3] * r_[3];
    const double det = r_[0] * r_[3] - r_[1] * r_[2];
    if (std::abs(c00 - 1.0) > kOrthoTol || std::abs(c11 - 1.0) > kOrthoTol || std::abs(c01) > kOrthoTol ||
        std::abs(det - 1.0) > kOrthoTol) {
      throw InvalidPoseError("rotation is not a proper orthonormal matrix");
    }
  }

  double r_[4]{1.0, 0.0, 0.0, 1.0};
  Waypoint t_{};
};

// Expresses `traj` (given in the parent frame of `pose`) in the frame of
// `pose`: every point p becomes R^-1 (p - t).
[[nodiscard]] inline Trajectory transform_to_frame(const Trajectory& traj, const Pose2& pose) {
  std::vector<Waypoint> out;
  out.reserve(traj.size());
  for (const auto& p : traj) out.push_back(pose.apply_inverse(p));
  return Trajectory(std::move(out), traj.dt());
}

// Inverse of transform_to_frame: p becomes R p + t.
[[nodiscard]] inline Trajectory transform_from_frame(const Trajectory& traj, const Pose2& pose) {
  std::vector<Waypoint> out;
  out.reserve(traj.size());
  for (const auto& p : traj) out.push_back(pose.apply(p));
  return Trajectory(std::move(out), traj.dt());
}

// Pose of the current ego frame expressed in the previous ego frame, given
// both world poses. `apply` on the result maps current-frame points into the
// previous frame; its inverse is the (R, t) pair that transform_to_frame
// expects for the same transfer.
[[nodiscard]] inline Pose2 relative_pose(const Pose2& world_pose_prev, const Pose2& world_pose_cur) {
  return world_pose_prev.inverse().compose(world_pose_cur);
}

// Re-expresses a trajectory given in the current ego frame in the previous
// ego frame.
[[nodiscard]] inline Trajectory to_previous_frame(const Trajectory& traj_cur, const Pose2& frame_delta) {
  return transform_from_frame(traj_cur, frame_delta);
}

// Linear interpolation along the arc-length parameterization to `n` points.
// Endpoints are preserved exactly. When `n` already equals the input length
// the input is returned unchanged, so resampling is idempotent.
[[nodiscard]] inline Trajectory resample(const Trajectory& traj, std::size_t n) {
  if (traj.size() < 2) throw GeometryError("resample needs at least two waypoints");
  if (n < 2) throw GeometryError("resample target count must be at least two");
  if (n == traj.size()) return traj;

  const auto pts = traj.points();
  std::vector<double> cumulative(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cumulative[i] = cumulative[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = cumulative.back();

  std::vector<Waypoint> out;
  out.reserve(n);
  out.push_back(pts.front());
  std::size_t seg = 1;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (total == 0.0) {
      out.push_back(pts.front());
      continue;
    }
    const double s = total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 1 < pts.size() && cumulative[seg] < s) ++seg;
    const double seg_len = cumulative[seg] - cumulative[seg - 1];
    const double u = seg_len > 0.0 ? (s - cumulative[seg - 1]) / seg_len : 0.0;
    out.push_back(pts[seg - 1] + u * (pts[seg] - pts[seg - 1]));
  }
  out.push_back(pts.back());
  return Trajectory(std::move(out), traj.dt());
}

struct OverlapMask {
  std::vector<bool> flags;
  // Waypoint i of the current trajectory pairs with waypoint i + frame_gap of
  // the previous one.
  std::size_t frame_gap{1};

  [[nodiscard]] std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  }
};

[[nodiscard]] inline OverlapMask overlap_mask(const Trajectory& cur, const Trajectory& prev,
                                              std::size_t frame_gap_steps) {
  if (frame_gap_steps < 1) throw DomainError("frame gap must be at least one step");
  OverlapMask mask;
  mask.frame_gap = frame_gap_steps;
  mask.flags.resize(cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i) mask.flags[i] = i + frame_gap_steps < prev.size();
  return mask;
}

// Clears flags beyond the first `steps` waypoints (per-horizon evaluation).
[[nodiscard]] inline OverlapMask truncate_mask(OverlapMask mask, std::size_t steps) {
  for (std::size_t i = steps; i < mask.flags.size(); ++i) mask.flags[i] = false;
  return mask;
}

// Heading at each waypoint from forward differences; the last waypoint reuses
// the previous heading. A single waypoint gets `fallback`.
[[nodiscard]] inline std::vector<double> waypoint_headings(const Trajectory& traj, double fallback = 0.0) {
  std::vector<double> h(traj.size(), fallback);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const Waypoint d = traj[i + 1] - traj[i];
    h[i] = (d.x == 0.0 && d.y == 0.0) ? (i > 0 ? h[i - 1] : fallback) : std::atan2(d.y, d.x);
  }
  if (traj.size() >= 2) h.back() = h[traj.size() - 2];
  return h;
}

}  // namespace momad
