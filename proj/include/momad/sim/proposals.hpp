#pragma once

// Synthetic multi-modal proposals standing in for the perception and motion
// stack, the deterministic query featurization, and feature noise injection.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "momad/error.hpp"
#include "momad/interactor.hpp"
#include "momad/metrics.hpp"
#include "momad/trajectory.hpp"
#include "momad/trajectory_set.hpp"

namespace momad::sim {

// Independent deterministic stream per (seed, frame, purpose).
[[nodiscard]] inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t frame, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Lateral mode amplitudes ~ N(0, mode_noise), one per candidate.
[[nodiscard]] inline std::vector<double> mode_amplitudes(std::size_t k, double mode_noise, std::uint64_t seed) {
  if (k < 1) throw ConfigError("proposal count must be at least one");
  if (!(mode_noise >= 0.0)) throw ConfigError("proposal noise levels must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> amplitude(k);
  for (auto& a : amplitude) a = mode_noise * normal(rng);
  return amplitude;
}

// Candidate c = gt_future + amplitude[c] * u^2 along the left normal
// (u = (i+1)/N, a smooth lateral mode) + i.i.d. per-coordinate jitter
// ~ N(0, jitter). Scores are the softmax of the negative ADE to an
// observation of gt_future corrupted with N(0, observation_noise) noise.
[[nodiscard]] inline TrajectorySet propose(const Trajectory& gt_future, std::span<const double> amplitude,
                                           double observation_noise, double jitter, std::uint64_t seed) {
  if (amplitude.empty()) throw ConfigError("proposal count must be at least one");
  if (!(observation_noise >= 0.0) || !(jitter >= 0.0)) throw ConfigError("proposal noise levels must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = amplitude.size();
  const std::size_t n = gt_future.size();
  const auto headings = waypoint_headings(gt_future);

  TrajectorySet set;
  set.candidates.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<Waypoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i + 1) / static_cast<double>(n);
      const double lateral = amplitude[c] * u * u;
      const Waypoint left{-std::sin(headings[i]), std::cos(headings[i])};
      const double jx = jitter * normal(rng);
      const double jy = jitter * normal(rng);
      pts[i] = {gt_future[i].x + lateral * left.x + jx, gt_future[i].y + lateral * left.y + jy};
    }
    set.candidates.emplace_back(std::move(pts), gt_future.dt());
  }

  std::vector<Waypoint> obs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ox = observation_noise * normal(rng);
    const double oy = observation_noise * normal(rng);
    obs[i] = {gt_future[i].x + ox, gt_future[i].y + oy};
  }
  const Trajectory observation(std::move(obs), gt_future.dt());
  Vector neg_ade(static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) neg_ade(static_cast<Eigen::Index>(c)) = -ade(set.candidates[c], observation);
  const Vector p = softmax(neg_ade);
  set.scores.assign(p.data(), p.data() + p.size());
  return set;
}

// Self-contained variant: amplitudes, jitter and observation all come from `seed`.
[[nodiscard]] inline TrajectorySet propose(const Trajectory& gt_future, std::size_t k, double mode_noise,
                                           double jitter, std::uint64_t seed) {
  const auto amplitude = mode_amplitudes(k, mode_noise, seed);
  return propose(gt_future, amplitude, mode_noise, jitter, seed + 1);
}

inline constexpr std::uint64_t kEncoderSeed = 0x6d6f6d616471ULL;

// Fixed linear featurization: each candidate's waypoints, centered on the
// set's mean trajectory and flattened, are projected to D_q dimensions by a
// seeded matrix. Candidates must share one length.
class QueryEncoder {
 public:
  QueryEncoder(Eigen::Index query_dim, std::size_t horizon, std::uint64_t seed = kEncoderSeed)
      : projection_(query_dim, static_cast<Eigen::Index>(2 * horizon)) {
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(2 * horizon));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
      for (Eigen::Index c = 0; c < projection_.cols(); ++c) projection_(r, c) = dist(rng);
    }
  }

  [[nodiscard]] Matrix encode(const TrajectorySet& set) const {
    const auto len = static_cast<std::size_t>(projection_.cols() / 2);
    if (set.empty()) throw EmptyInputError("no candidates to encode");
    Vector mean = Vector::Zero(projection_.cols());
    std::vector<Vector> flat;
    for (const auto& c : set.candidates) {
      if (c.size() != len) throw ShapeError("candidate length does not match the encoder horizon");
      Vector v(projection_.cols());
      for (std::size_t i = 0; i < len; ++i) {
        v(static_cast<Eigen::Index>(2 * i)) = c[i].x;
        v(static_cast<Eigen::Index>(2 * i + 1)) = c[i].y;
      }
      mean += v;
      flat.push_back(std::move(v));
    }
    mean /= static_cast<double>(set.size());
    Matrix out(static_cast<Eigen::Index>(set.size()), projection_.rows());
    for (std::size_t k = 0; k < flat.size(); ++k) {
      out.row(static_cast<Eigen::Index>(k)) = (projection_ * (flat[k] - mean)).transpose();
    }
    return out;
  }

 private:
  Matrix projection_;
};

// x + ns * eps, eps ~ N(0, 1) per element.
[[nodiscard]] inline Vector perturb_features(const Vector& x, double ns, std::uint64_t seed) {
  if (!(ns >= 0.0) || !std::isfinite(ns)) throw DomainError("noise factor must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += ns * normal(rng);
  return out;
}

[[nodiscard]] inline Matrix perturb_features(const Matrix& x, double ns, std::uint64_t seed) {
  const Vector flat = Eigen::Map<const Vector>(x.data(), x.size());
  const Vector noisy = perturb_features(flat, ns, seed);
  return Eigen::Map<const Matrix>(noisy.data(), x.rows(), x.cols());
}

}  // namespace momad::sim
