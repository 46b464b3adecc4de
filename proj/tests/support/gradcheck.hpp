#pragma once

// Central finite-difference check of the MPI weight gradients for the loss
// L = ||trajectories||^2. The differenced loss is evaluated by an independent
// long double re-implementation of the forward pass: with a 1e-5 step, double
// cancellation noise (~1e-10 absolute on L ~ 10) would swamp entries whose
// true gradient is ~1e-7.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "momad/interactor.hpp"
#include "momad/interactor_grad.hpp"
#include "support/generators.hpp"

namespace momad::testing {

struct GradCase {
  WeightBundle weights;
  Vector selected;
  std::vector<QueryBatch> history;
  Matrix instances;
  MpiOptions opts;
};

inline GradCase random_grad_case(Rng& rng, const MpiDims& dims, std::size_t depth = 1,
                                 MlpActivation act = MlpActivation::Identity) {
  GradCase c;
  c.weights = WeightBundle::seeded(dims, rng());
  // Seeded init leaves biases at zero; randomize them so their paths are exercised.
  for (const auto& name : WeightBundle::names()) {
    if (WeightBundle::is_bias(name)) c.weights.set(name, random_matrix(rng, c.weights.at(name).rows(), 1, 0.5));
  }
  c.selected = random_vector(rng, dims.query_dim);
  for (std::size_t t = 0; t < depth; ++t) {
    c.history.push_back({random_matrix(rng, dims.modes, dims.query_dim), random_vector(rng, dims.modes, 2.0)});
  }
  c.instances = random_matrix(rng, static_cast<Eigen::Index>(uniform_size(rng, 1, 5)), dims.query_dim);
  c.opts.mlp_activation = act;
  return c;
}

inline double energy(const GradCase& c, const WeightBundle& w) {
  return mpi_forward(c.selected, c.history, c.instances, w, c.opts).trajectories.squaredNorm();
}

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using LParams = std::map<std::string, LMatrix>;

inline LParams extended(const WeightBundle& w) {
  LParams out;
  for (const auto& [name, m] : w.entries()) out[name] = m.cast<long double>();
  return out;
}

inline long double act_ld(MlpActivation act, long double x) {
  switch (act) {
    case MlpActivation::Identity:
      return x;
    case MlpActivation::Relu:
      return x > 0.0L ? x : 0.0L;
    case MlpActivation::Tanh:
      return std::tanh(x);
  }
  return x;
}

inline long double sigmoid_ld(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

// gate -> per-row LSTM over frames -> attention -> plan head, then ||traj||^2.
inline long double reference_energy(const GradCase& c, const LParams& p) {
  const LMatrix& W = p.at("mlp.W");
  const Eigen::Index D = W.rows();
  const Eigen::Index K = c.history.front().size();
  LMatrix mixed(K, D);
  for (Eigen::Index k = 0; k < K; ++k) {
    LVector h = LVector::Zero(D), cell = LVector::Zero(D);
    for (const auto& frame : c.history) {
      const LVector x0 = frame.rows.row(k).transpose().cast<long double>();
      const LVector pre = W * x0 + p.at("mlp.b").col(0);
      const long double gate = sigmoid_ld(static_cast<long double>(frame.scores(k)));
      LVector x(D);
      for (Eigen::Index j = 0; j < D; ++j) x(j) = gate * act_ld(c.opts.mlp_activation, pre(j));
      const LVector z = p.at("lstm.W_ih") * x + p.at("lstm.W_hh") * h + p.at("lstm.b").col(0);
      for (Eigen::Index j = 0; j < D; ++j) {
        const long double i = sigmoid_ld(z(j));
        const long double f = sigmoid_ld(z(D + j));
        const long double g = std::tanh(z(2 * D + j));
        const long double o = sigmoid_ld(z(3 * D + j));
        cell(j) = f * cell(j) + i * g;
        h(j) = o * std::tanh(cell(j));
      }
    }
    mixed.row(k) = h.transpose();
  }
  const LVector qp = p.at("attn.W_q") * c.selected.cast<long double>();
  const LMatrix kp = mixed * p.at("attn.W_k").transpose();
  const LMatrix vp = mixed * p.at("attn.W_v").transpose();
  LVector logits = kp * qp / std::sqrt(static_cast<long double>(D));
  const long double top = logits.maxCoeff();
  LVector e = (logits.array() - top).exp();
  e /= e.sum();
  const LVector enriched = p.at("attn.W_o") * (vp.transpose() * e);
  LVector zc(2 * D);
  zc.head(D) = enriched;
  zc.tail(D) = c.instances.colwise().mean().transpose().cast<long double>();
  const LVector flat = p.at("head.W_traj") * zc + p.at("head.b_traj").col(0);
  return flat.squaredNorm();
}

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose
// true gradient vanishes (e.g. head.W_score, which the loss never touches)
// from dividing rounding noise by zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradReport {
  double max_rel{0.0};
  std::string worst;
  std::size_t entries{0};
};

inline GradReport check_gradients(const GradCase& c, double step = 1e-5) {
  const MpiGradients g = trajectory_energy_gradients(c.selected, c.history, c.instances, c.weights, c.opts);
  GradReport report;
  LParams p = extended(c.weights);
  const long double h = step;
  for (const auto& [name, value] : c.weights.entries()) {
    const Matrix& analytic = g.weights.at(name);
    for (Eigen::Index i = 0; i < value.rows(); ++i) {
      for (Eigen::Index j = 0; j < value.cols(); ++j) {
        const long double orig = p.at(name)(i, j);
        p.at(name)(i, j) = orig + h;
        const long double up = reference_energy(c, p);
        p.at(name)(i, j) = orig - h;
        const long double down = reference_energy(c, p);
        p.at(name)(i, j) = orig;
        const double numeric = static_cast<double>((up - down) / (2.0L * h));
        const double rel = relative_error(analytic(i, j), numeric);
        ++report.entries;
        if (rel > report.max_rel) {
          report.max_rel = rel;
          report.worst = name + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
      }
    }
  }
  return report;
}

}  // namespace momad::testing
