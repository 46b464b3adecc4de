#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "momad/io/json.hpp"
#include "momad/sim/closed_loop.hpp"

using namespace momad;
using namespace momad::sim;

namespace {

ScenarioSpec arc_spec(std::uint64_t seed, double speed = 4.0, double duration = 7.5) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::ArcTurn;
  spec.radius = 20.0;
  spec.angle = std::numbers::pi / 2;
  spec.speed = speed;
  spec.duration = duration;
  spec.seed = seed;
  return spec;
}

// Serialized frame lines only (the header names the planner).
std::string frame_lines(const ScenarioLog& log) {
  std::ostringstream os;
  io::write_log(os, log);
  const std::string s = os.str();
  return s.substr(s.find('\n') + 1);
}

SimConfig zero_noise() {
  SimConfig c;
  c.mode_noise = 0.0;
  c.jitter = 0.0;
  c.ns = 0.0;
  return c;
}

}  // namespace

TEST(ClosedLoop, ZeroNoiseIsPerfectForBothPlanners) {
  for (const auto& planner : {PlannerConfig::oneshot(), PlannerConfig{}}) {
    const auto r = run_closed_loop(arc_spec(3), zero_noise(), planner);
    for (std::size_t h = 0; h < 3; ++h) {
      EXPECT_NEAR(r.report.l2[h], 0.0, 1e-9);
      EXPECT_NEAR(r.report.tpc[h], 0.0, 1e-9);
      EXPECT_EQ(r.report.collision_rate[h], 0.0);
    }
    EXPECT_NEAR(r.report.min_ade, 0.0, 1e-9);
  }
}

TEST(ClosedLoop, DeterministicLogs) {
  const auto a = run_closed_loop(arc_spec(5), SimConfig{}, PlannerConfig{});
  const auto b = run_closed_loop(arc_spec(5), SimConfig{}, PlannerConfig{});
  std::ostringstream sa, sb;
  io::write_log(sa, a.log);
  io::write_log(sb, b.log);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.report, b.report);
}

TEST(ClosedLoop, FrameInvariants) {
  const auto r = run_closed_loop(arc_spec(6), SimConfig{}, PlannerConfig{});
  const auto& frames = r.log.frames;
  ASSERT_EQ(frames.size(), 15u - 6u + 1u);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    EXPECT_LT(frames[f].chosen_index, 6u);
    EXPECT_EQ(frames[f].index, f);
    EXPECT_DOUBLE_EQ(frames[f].time, 0.5 * static_cast<double>(f));
    EXPECT_EQ(frames[f].ttm_index.has_value(), f > 0);
    if (f + 1 < frames.size()) {
      const Waypoint first = frames[f].ego_pose.apply(frames[f].chosen_trajectory[0]);
      EXPECT_NEAR(frames[f + 1].ego_pose.translation().x, first.x, 1e-9);
      EXPECT_NEAR(frames[f + 1].ego_pose.translation().y, first.y, 1e-9);
    }
  }
}

TEST(ClosedLoop, DepthZeroEqualsOneShot) {
  for (std::uint64_t seed : {1, 2, 3}) {
    PlannerConfig depth0;
    depth0.history_depth = 0;
    const auto a = run_closed_loop(arc_spec(seed), SimConfig{}, depth0);
    const auto b = run_closed_loop(arc_spec(seed), SimConfig{}, PlannerConfig::oneshot());
    EXPECT_EQ(frame_lines(a.log), frame_lines(b.log));
    EXPECT_EQ(a.report, b.report);
  }
}

TEST(ClosedLoop, ProposalsArePairedAcrossPlanners) {
  const auto a = run_closed_loop(arc_spec(8), SimConfig{}, PlannerConfig{});
  const auto b = run_closed_loop(arc_spec(8), SimConfig{}, PlannerConfig::oneshot());
  ASSERT_EQ(a.log.frames.size(), b.log.frames.size());
  for (std::size_t f = 0; f < a.log.frames.size(); ++f) {
    EXPECT_EQ(a.log.frames[f].proposals.candidates, b.log.frames[f].proposals.candidates);
    EXPECT_EQ(a.log.frames[f].proposals.scores, b.log.frames[f].proposals.scores);
  }
}

TEST(ClosedLoop, EvaluateLogReproducesReport) {
  for (auto protocol : {L2Protocol::AtTimestep, L2Protocol::AveragedUpTo}) {
    SimConfig cfg;
    cfg.protocol = protocol;
    const auto r = run_closed_loop(arc_spec(9), cfg, PlannerConfig{});
    EXPECT_EQ(evaluate_log(r.log, protocol), r.report);
  }
}

TEST(ClosedLoop, ObstacleInPathRegistersCollision) {
  ScenarioSpec spec;
  spec.duration = 6.0;
  spec.obstacles.push_back({ObstacleBox{{12.0, 0.0}, 0.0, 2.0, 2.0}, {}});
  const auto r = run_closed_loop(spec, zero_noise(), PlannerConfig::oneshot());
  EXPECT_GT(r.report.collision_rate[2], 0.0);
}

TEST(ClosedLoop, FlattenOcclusionForcesFirstCandidate) {
  SimConfig cfg;
  cfg.occlusion = {true, 2, 5, OcclusionMode::Flatten};
  const auto r = run_closed_loop(arc_spec(10), cfg, PlannerConfig::oneshot());
  for (std::size_t f = 2; f < 5; ++f) EXPECT_EQ(r.log.frames[f].chosen_index, 0u);
}

TEST(ClosedLoop, ShortScenarioRejected) {
  ScenarioSpec spec;
  spec.duration = 2.0;
  EXPECT_THROW((void)run_closed_loop(spec, SimConfig{}, PlannerConfig{}), ConfigError);
  PlannerConfig deep;
  deep.history_depth = 3;
  EXPECT_THROW((void)run_closed_loop(arc_spec(1), SimConfig{}, deep), ConfigError);
}

TEST(ClosedLoop, MismatchedWeightsRejected) {
  const auto w = WeightBundle::seeded({8, 6, 6}, 1);
  EXPECT_THROW((void)run_closed_loop(arc_spec(1), SimConfig{}, PlannerConfig{}, w), ConfigError);
}

TEST(StepMomentum, NoHistoryFallsBackToOneShot) {
  TrajectorySet set;
  set.candidates = {Trajectory({{1, 0}}), Trajectory({{2, 0}})};
  set.scores = {0.2, 0.8};
  const auto w = WeightBundle::zeros({4, 2, 1});
  const auto step = step_momentum(set, {}, Pose2::identity(), w, Matrix());
  EXPECT_EQ(step.index, 1u);
  EXPECT_FALSE(step.ttm_index.has_value());
  EXPECT_EQ(step.chosen, set.candidates[1]);
}

TEST(StepMomentum, ZeroWeightsGiveUniformScoresAndTieToZero) {
  TrajectorySet set;
  set.candidates = {Trajectory({{0, 3}, {1, 3}}), Trajectory({{0, 0}, {1, 0}})};
  set.scores = {0.9, 0.1};
  set.queries = Matrix::Ones(2, 4);
  const auto w = WeightBundle::zeros({4, 2, 2});
  const std::vector<PlanMemory> hist{{Trajectory({{0, 0}, {1, 0}}), QueryBatch{Matrix::Ones(2, 4), Vector::Zero(2)}, Pose2::identity()}};
  const auto step = step_momentum(set, hist, Pose2::identity(), w, Matrix::Ones(3, 4));
  ASSERT_TRUE(step.ttm_index.has_value());
  EXPECT_EQ(*step.ttm_index, 1u);
  EXPECT_EQ(step.refined_scores, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(step.index, 0u);
  // Zero offsets: the refined choice is the TTM anchor itself.
  EXPECT_EQ(step.chosen, set.candidates[1]);
}

// Two proposals trade the score lead every frame; only one agrees with the
// previously executed plan. Momentum (zero MPI weights, so the refined
// trajectory is the TTM anchor) stays on it while one-shot alternates.
TEST(StepMomentum, OscillationCaseStaysConsistent) {
  const Trajectory consistent({{1, 0}, {2, 0}, {3, 0}});
  const Trajectory swerve({{1, 1}, {2, 2}, {3, 3}});
  const auto w = WeightBundle::zeros({2, 2, 3});
  std::vector<PlanMemory> history{{consistent, QueryBatch{Matrix::Zero(2, 2), Vector::Zero(2)}, Pose2::identity()}};
  std::vector<std::size_t> oneshot_picks, momentum_picks;
  for (int frame = 0; frame < 4; ++frame) {
    TrajectorySet set;
    set.candidates = {consistent, swerve};
    set.scores = frame % 2 == 0 ? std::vector<double>{0.4, 0.6} : std::vector<double>{0.6, 0.4};
    set.queries = Matrix::Zero(2, 2);
    oneshot_picks.push_back(step_oneshot(set));
    const auto step = step_momentum(set, history, Pose2::identity(), w, Matrix::Zero(1, 2));
    momentum_picks.push_back(*step.ttm_index);
    EXPECT_EQ(step.chosen, consistent);
    history = {{step.chosen, QueryBatch{set.queries, Vector::Zero(2)}, Pose2::identity()}};
  }
  EXPECT_EQ(oneshot_picks, (std::vector<std::size_t>{1, 0, 1, 0}));
  EXPECT_EQ(momentum_picks, (std::vector<std::size_t>{0, 0, 0, 0}));
}
