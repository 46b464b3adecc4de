#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "momad/error.hpp"
#include "momad/trajectory.hpp"

namespace momad {

enum class Command { Left, Right, Straight };

// K multi-modal candidates with their scores and (optionally) one planning
// query embedding per candidate, stored as the rows of `queries`.
struct TrajectorySet {
  std::vector<Trajectory> candidates;
  std::vector<double> scores;
  Eigen::MatrixXd queries;        // K x D_q, or empty
  std::vector<Command> commands;  // empty when every candidate shares one command

  [[nodiscard]] std::size_t size() const noexcept { return candidates.size(); }
  [[nodiscard]] bool empty() const noexcept { return candidates.empty(); }
  [[nodiscard]] bool has_queries() const noexcept { return queries.rows() > 0; }

  void validate() const {
    if (scores.size() != candidates.size()) throw ShapeError("candidate and score counts differ");
    if (has_queries() && static_cast<std::size_t>(queries.rows()) != candidates.size()) {
      throw ShapeError("query rows must match candidate count");
    }
    if (!commands.empty() && commands.size() != candidates.size()) {
      throw ShapeError("command tags must match candidate count");
    }
  }
};

// Indices of candidates issued under `command`. Untagged sets return every index.
[[nodiscard]] inline std::vector<std::size_t> command_subset(const TrajectorySet& set, Command command) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (set.commands.empty() || set.commands[k] == command) idx.push_back(k);
  }
  return idx;
}

// Highest score, ties to the lowest index.
[[nodiscard]] inline std::size_t argmax_score(std::span<const double> scores) {
  if (scores.empty()) throw EmptyInputError("cannot select from an empty score list");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

}  // namespace momad
