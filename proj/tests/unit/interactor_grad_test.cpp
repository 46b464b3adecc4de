#include <gtest/gtest.h>

#include "momad/interactor_grad.hpp"
#include "support/gradcheck.hpp"

using namespace momad;
using momad::testing::Rng;

TEST(MpiBackward, ForwardOutputMatches) {
  Rng rng(41);
  const auto c = momad::testing::random_grad_case(rng, {8, 4, 6});
  const auto g = trajectory_energy_gradients(c.selected, c.history, c.instances, c.weights);
  const auto f = mpi_forward(c.selected, c.history, c.instances, c.weights);
  EXPECT_TRUE((g.output.trajectories.array() == f.trajectories.array()).all());
  EXPECT_TRUE((g.output.scores.array() == f.scores.array()).all());
  EXPECT_EQ(g.weights.dims().query_dim, 8);
}

TEST(GradCheck, ExtendedReferenceMatchesForward) {
  Rng rng(47);
  for (auto act : {MlpActivation::Identity, MlpActivation::Tanh, MlpActivation::Relu}) {
    for (std::size_t depth : {1u, 2u}) {
      const auto c = momad::testing::random_grad_case(rng, {6, 3, 4}, depth, act);
      const double fast = momad::testing::energy(c, c.weights);
      const auto ref = static_cast<double>(momad::testing::reference_energy(c, momad::testing::extended(c.weights)));
      EXPECT_NEAR(ref, fast, 1e-12 * std::max(1.0, std::abs(fast)));
    }
  }
}

TEST(MpiBackward, ScoreHeadUntouchedByTrajectoryLoss) {
  Rng rng(42);
  const auto c = momad::testing::random_grad_case(rng, {8, 4, 6});
  const auto g = trajectory_energy_gradients(c.selected, c.history, c.instances, c.weights);
  EXPECT_EQ(g.weights.at("head.W_score").squaredNorm(), 0.0);
  EXPECT_EQ(g.weights.at("head.b_score").squaredNorm(), 0.0);
}

TEST(MpiBackward, FiniteDifferenceSingleFrame) {
  Rng rng(43);
  for (int draw = 0; draw < 3; ++draw) {
    const auto c = momad::testing::random_grad_case(rng, {8, 4, 6});
    const auto r = momad::testing::check_gradients(c);
    EXPECT_LE(r.max_rel, 1e-4) << "worst entry " << r.worst;
  }
}

TEST(MpiBackward, FiniteDifferenceTwoFramesAndActivations) {
  Rng rng(44);
  for (auto act : {MlpActivation::Identity, MlpActivation::Tanh, MlpActivation::Relu}) {
    const auto c = momad::testing::random_grad_case(rng, {5, 3, 6}, 2, act);
    const auto r = momad::testing::check_gradients(c);
    EXPECT_LE(r.max_rel, 1e-4) << "worst entry " << r.worst;
  }
}

TEST(MpiBackward, ScoreGradientsViaGenericSeed) {
  // Loss = sum of scores: d_traj = 0, d_scores = 1.
  Rng rng(45);
  const auto c = momad::testing::random_grad_case(rng, {6, 3, 6});
  const auto fwd = mpi_forward(c.selected, c.history, c.instances, c.weights);
  const auto g = mpi_backward(c.selected, c.history, c.instances, c.weights,
                              Matrix::Zero(fwd.trajectories.rows(), fwd.trajectories.cols()),
                              Vector::Ones(fwd.scores.size()));
  WeightBundle w = c.weights;
  const double h = 1e-5;
  for (const auto& name : {"attn.W_q", "lstm.W_ih", "mlp.b", "head.W_score"}) {
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, w.at(name).rows()); ++i) {
      const double orig = w.at(name)(i, 0);
      w.at(name)(i, 0) = orig + h;
      const double up = mpi_forward(c.selected, c.history, c.instances, w).scores.sum();
      w.at(name)(i, 0) = orig - h;
      const double down = mpi_forward(c.selected, c.history, c.instances, w).scores.sum();
      w.at(name)(i, 0) = orig;
      EXPECT_LE(momad::testing::relative_error(g.weights.at(name)(i, 0), (up - down) / (2 * h)), 1e-4) << name;
    }
  }
}

TEST(MpiBackward, RejectsMismatchedSeedShapes) {
  Rng rng(46);
  const auto c = momad::testing::random_grad_case(rng, {4, 2, 6});
  EXPECT_THROW((void)mpi_backward(c.selected, c.history, c.instances, c.weights, Matrix::Zero(3, 3), Vector::Zero(2)),
               ShapeError);
}
