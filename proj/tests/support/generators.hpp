#pragma once

// Seeded random generators shared by property tests and the acceptance suite.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "momad/collision.hpp"
#include "momad/interactor.hpp"
#include "momad/trajectory.hpp"

namespace momad::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Trajectory random_trajectory(Rng& rng, std::size_t min_len, std::size_t max_len, double scale = 20.0) {
  const std::size_t n = uniform_size(rng, min_len, max_len);
  std::vector<Waypoint> pts(n);
  for (auto& p : pts) p = {uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
  return Trajectory(std::move(pts));
}

// Smooth forward-moving path, closer to what a planner emits.
inline Trajectory random_path(Rng& rng, std::size_t n, double step = 2.0) {
  std::vector<Waypoint> pts(n);
  double heading = uniform(rng, -0.3, 0.3);
  Waypoint p{};
  for (auto& q : pts) {
    heading += uniform(rng, -0.2, 0.2);
    p = p + step * Waypoint{std::cos(heading), std::sin(heading)};
    q = p;
  }
  return Trajectory(std::move(pts));
}

inline Pose2 random_pose(Rng& rng, double scale = 50.0) {
  return Pose2::from_heading(uniform(rng, -std::numbers::pi, std::numbers::pi),
                             {uniform(rng, -scale, scale), uniform(rng, -scale, scale)});
}

inline ObstacleBox random_box(Rng& rng, double spread = 4.0) {
  return {{uniform(rng, -spread, spread), uniform(rng, -spread, spread)},
          uniform(rng, -std::numbers::pi, std::numbers::pi),
          uniform(rng, 0.5, 5.0),
          uniform(rng, 0.5, 3.0)};
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, -scale, scale);
  }
  return m;
}

inline Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

}  // namespace momad::testing
