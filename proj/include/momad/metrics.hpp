#pragma once

// Planning metrics: L2 displacement, trajectory prediction consistency and
// best-of-K displacement, plus the report type and its serializations.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "momad/collision.hpp"
#include "momad/error.hpp"
#include "momad/trajectory.hpp"
#include "momad/trajectory_set.hpp"

namespace momad {

// AtTimestep: displacement at the horizon waypoint (VAD style).
// AveragedUpTo: mean displacement over all waypoints up to it (UniAD style).
enum class L2Protocol { AtTimestep, AveragedUpTo };

[[nodiscard]] inline L2Protocol parse_protocol(std::string_view name) {
  if (name == "vad") return L2Protocol::AtTimestep;
  if (name == "uniad") return L2Protocol::AveragedUpTo;
  throw ConfigError("unknown protocol '" + std::string(name) + "' (expected uniad or vad)");
}

[[nodiscard]] inline std::string_view protocol_name(L2Protocol p) {
  return p == L2Protocol::AtTimestep ? "vad" : "uniad";
}

[[nodiscard]] inline std::vector<double> l2_error(const Trajectory& pred, const Trajectory& gt,
                                                  std::span<const double> horizons, L2Protocol protocol) {
  if (std::abs(pred.dt() - gt.dt()) > 1e-12) throw AlignmentError("prediction and ground truth differ in dt");
  const std::size_t len = std::min(pred.size(), gt.size());
  std::vector<double> out;
  out.reserve(horizons.size());
  for (double h : horizons) {
    const std::size_t n = horizon_steps(h, pred.dt(), len);
    if (protocol == L2Protocol::AtTimestep) {
      out.push_back(distance(pred[n - 1], gt[n - 1]));
    } else {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += distance(pred[i], gt[i]);
      out.push_back(sum / static_cast<double>(n));
    }
  }
  return out;
}

// Per-sample consistency: `cur` is moved into the previous frame with
// `frame_delta` (pose of the current frame in the previous one), then the
// root-mean-square displacement to the overlapping waypoints of `prev` is
// taken over the masked indices. Returns nullopt when nothing is masked in,
// so the sample does not count towards a dataset mean.
[[nodiscard]] inline std::optional<double> tpc(const Trajectory& cur_pred, const Trajectory& prev_pred,
                                               const Pose2& frame_delta, const OverlapMask& mask) {
  if (mask.flags.size() != cur_pred.size()) throw ShapeError("overlap mask length must match the current trajectory");
  const Trajectory moved = to_previous_frame(cur_pred, frame_delta);
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    if (!mask.flags[i]) continue;
    const std::size_t j = i + mask.frame_gap;
    if (j >= prev_pred.size()) throw ShapeError("overlap mask selects a waypoint beyond the previous trajectory");
    const Waypoint d = moved[i] - prev_pred[j];
    sum_sq += d.x * d.x + d.y * d.y;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return std::sqrt(sum_sq / static_cast<double>(count));
}

struct AdeFde {
  double ade{0.0};
  double fde{0.0};
  std::size_t index{0};
};

[[nodiscard]] inline double ade(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw AlignmentError("ADE needs equal-length trajectories");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += distance(a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

// Candidate with the lowest ADE (ties to the lowest index) and its FDE.
[[nodiscard]] inline AdeFde min_ade_fde(const TrajectorySet& candidates, const Trajectory& gt) {
  if (candidates.empty()) throw EmptyInputError("no candidates for ADE/FDE");
  AdeFde best{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double a = ade(candidates.candidates[k], gt);
    if (a < best.ade) best = {a, distance(candidates.candidates[k].back(), gt.back()), k};
  }
  return best;
}

// Order-stable mean with Neumaier compensated summation.
class MeanAccumulator {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
    ++count_;
  }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] double mean() const noexcept { return count_ == 0 ? 0.0 : (sum_ + comp_) / static_cast<double>(count_); }

 private:
  double sum_{0.0};
  double comp_{0.0};
  std::size_t count_{0};
};

// Dataset-level report. Per-horizon vectors align with `horizons`. Metrics
// with no contributing samples are reported as 0.
struct MetricReport {
  std::vector<double> horizons;  // seconds
  std::vector<double> l2;
  std::vector<double> collision_rate;  // percent
  std::vector<double> tpc;
  double min_ade{0.0};
  double min_fde{0.0};

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// Shortest representation that round-trips to the same double.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// CSV with columns metric,horizon_s,value. Horizon-free metrics use "all".
[[nodiscard]] inline std::string to_csv(const MetricReport& r) {
  std::string out = "metric,horizon_s,value\n";
  auto rows = [&](std::string_view name, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.append(name).append(",").append(format_double(r.horizons[i])).append(",");
      out.append(format_double(values[i])).append("\n");
    }
  };
  rows("l2", r.l2);
  rows("collision_rate", r.collision_rate);
  rows("tpc", r.tpc);
  out.append("min_ade,all,").append(format_double(r.min_ade)).append("\n");
  out.append("min_fde,all,").append(format_double(r.min_fde)).append("\n");
  return out;
}

}  // namespace momad
