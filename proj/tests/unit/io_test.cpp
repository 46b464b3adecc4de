#include <gtest/gtest.h>

#include <sstream>

#include "momad/io/json.hpp"
#include "momad/sim/closed_loop.hpp"
#include "support/generators.hpp"

using namespace momad;
using momad::testing::Rng;

namespace {

std::string serialize(const sim::ScenarioLog& log) {
  std::ostringstream os;
  io::write_log(os, log);
  return os.str();
}

sim::ScenarioLog sample_log() {
  sim::ScenarioSpec spec;
  spec.kind = sim::ScenarioKind::ArcTurn;
  spec.duration = 5.0;
  spec.seed = 4;
  spec.obstacles.push_back({ObstacleBox{{15.0, 6.0}, 0.3, 4.0, 2.0}, {0.5, 0.0}});
  return sim::run_closed_loop(spec, sim::SimConfig{}, sim::PlannerConfig{}).log;
}

std::size_t error_line(const std::string& text) {
  std::istringstream is(text);
  try {
    (void)io::read_log(is);
  } catch (const DataError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Io, TrajectoryPoseBoxRoundTripExactly) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Trajectory t = momad::testing::random_trajectory(rng, 1, 12);
    EXPECT_EQ(io::trajectory_from_json(io::json::parse(io::to_json(t).dump())), t);
    const Pose2 p = momad::testing::random_pose(rng);
    EXPECT_EQ(io::pose_from_json(io::json::parse(io::to_json(p).dump())), p);
    const ObstacleBox b = momad::testing::random_box(rng);
    const ObstacleBox back = io::box_from_json(io::json::parse(io::to_json(b).dump()));
    EXPECT_EQ(back.center, b.center);
    EXPECT_EQ(back.heading, b.heading);
    EXPECT_EQ(back.length, b.length);
    EXPECT_EQ(back.width, b.width);
  }
}

TEST(Io, WeightsRoundTripExactly) {
  const auto w = WeightBundle::seeded({16, 6, 6}, 11);
  EXPECT_EQ(io::weights_from_json(io::json::parse(io::to_json(w).dump())), w);
}

TEST(Io, WeightsWithMissingTensorRejected) {
  auto j = io::to_json(WeightBundle::seeded({4, 2, 2}, 1));
  j.erase(j.begin());
  EXPECT_THROW((void)io::weights_from_json(j), Error);
}

TEST(Io, LogRoundTripIsByteExact) {
  const auto log = sample_log();
  const std::string text = serialize(log);
  std::istringstream is(text);
  const auto back = io::read_log(is);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.frames.size(), log.frames.size());
  EXPECT_EQ(sim::evaluate_log(back, log.config.protocol), sim::evaluate_log(log, log.config.protocol));
}

TEST(Io, CorruptLinesReportLineNumber) {
  const std::string text = serialize(sample_log());
  std::vector<std::string> lines;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  ASSERT_GE(lines.size(), 4u);
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& l : v) out += l + "\n";
    return out;
  };
  auto broken = lines;
  broken[2] = broken[2].substr(0, broken[2].size() / 2);
  EXPECT_EQ(error_line(join(broken)), 3u);
  broken = lines;
  broken[3] = R"({"type":"frame","index":3})";
  EXPECT_EQ(error_line(join(broken)), 4u);
  broken = lines;
  broken.erase(broken.begin());
  EXPECT_EQ(error_line(join(broken)), 1u);
  EXPECT_EQ(error_line(""), 1u);
}

TEST(Io, SamplesParseAndValidate) {
  std::istringstream ok(
      R"({"sample_id":"a","scene_id":"s","gt_future":{"dt":0.5,"points":[[0,0],[1,0],[2,0],[3,0],[4,0],[5,0]]}})"
      "\n\n");
  const auto samples = io::read_samples(ok);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].scene_id, "s");
  EXPECT_EQ(io::sample_from_json(io::to_json(samples[0])), samples[0]);

  std::istringstream short_future(
      "\n" R"({"sample_id":"a","scene_id":"s","gt_future":{"dt":0.5,"points":[[0,0],[1,0]]}})");
  try {
    (void)io::read_samples(short_future);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Io, EnumNamesRoundTrip) {
  for (auto k : {DistanceKind::Hausdorff, DistanceKind::MeanEuclidean}) EXPECT_EQ(io::parse_distance(io::distance_name(k)), k);
  for (auto k : {sim::PlannerKind::OneShot, sim::PlannerKind::Momentum}) EXPECT_EQ(io::parse_planner(io::planner_name(k)), k);
  EXPECT_THROW((void)io::parse_distance("manhattan"), ConfigError);
  EXPECT_THROW((void)io::parse_planner("greedy"), ConfigError);
}
