#pragma once

// Momentum planning interactor. Historical planning queries are gated by
// their scores, pushed through an affine map and an LSTM cell, then
// cross-attended by the selected planning query; a linear plan head turns the
// enriched query into K trajectories and K score logits.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momad/error.hpp"

namespace momad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// K historical planning queries (rows) and their pre-activation scores.
struct QueryBatch {
  Matrix rows;
  Vector scores;

  [[nodiscard]] Eigen::Index size() const noexcept { return rows.rows(); }
};

struct LstmState {
  Vector h;
  Vector c;

  [[nodiscard]] static LstmState zeros(Eigen::Index dim) { return {Vector::Zero(dim), Vector::Zero(dim)}; }
};

enum class MlpActivation { Identity, Relu, Tanh };

struct MpiDims {
  Eigen::Index query_dim{32};  // D_q
  Eigen::Index modes{6};       // K
  Eigen::Index horizon{6};     // N_t
};

namespace weight_names {
inline constexpr const char* kMlpW = "mlp.W";
inline constexpr const char* kMlpB = "mlp.b";
inline constexpr const char* kLstmWih = "lstm.W_ih";
inline constexpr const char* kLstmWhh = "lstm.W_hh";
inline constexpr const char* kLstmB = "lstm.b";
inline constexpr const char* kAttnWq = "attn.W_q";
inline constexpr const char* kAttnWk = "attn.W_k";
inline constexpr const char* kAttnWv = "attn.W_v";
inline constexpr const char* kAttnWo = "attn.W_o";
inline constexpr const char* kHeadWTraj = "head.W_traj";
inline constexpr const char* kHeadBTraj = "head.b_traj";
inline constexpr const char* kHeadWScore = "head.W_score";
inline constexpr const char* kHeadBScore = "head.b_score";
}  // namespace weight_names

// Named dense parameters. Biases are stored as n x 1 matrices. LSTM gate
// blocks are stacked in the order i, f, g, o.
class WeightBundle {
 public:
  WeightBundle() = default;

  [[nodiscard]] static std::vector<std::string> names() {
    using namespace weight_names;
    return {kMlpW,   kMlpB,   kLstmWih, kLstmWhh,   kLstmB,     kAttnWq,     kAttnWk,
            kAttnWv, kAttnWo, kHeadWTraj, kHeadBTraj, kHeadWScore, kHeadBScore};
  }

  [[nodiscard]] static std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> expected_shapes(const MpiDims& d) {
    using namespace weight_names;
    const auto D = d.query_dim;
    const auto T = d.modes * d.horizon * 2;
    return {{kMlpW, {D, D}},       {kMlpB, {D, 1}},       {kLstmWih, {4 * D, D}},   {kLstmWhh, {4 * D, D}},
            {kLstmB, {4 * D, 1}},  {kAttnWq, {D, D}},     {kAttnWk, {D, D}},        {kAttnWv, {D, D}},
            {kAttnWo, {D, D}},     {kHeadWTraj, {T, 2 * D}}, {kHeadBTraj, {T, 1}},  {kHeadWScore, {d.modes, 2 * D}},
            {kHeadBScore, {d.modes, 1}}};
  }

  [[nodiscard]] static WeightBundle zeros(const MpiDims& dims) {
    WeightBundle w;
    for (const auto& [name, shape] : expected_shapes(dims)) w.set(name, Matrix::Zero(shape.first, shape.second));
    return w;
  }

  [[nodiscard]] static bool is_bias(const std::string& name) {
    using namespace weight_names;
    return name == kMlpB || name == kLstmB || name == kHeadBTraj || name == kHeadBScore;
  }

  // Weight matrices ~ uniform(-1/sqrt(D_q), 1/sqrt(D_q)), deterministic in
  // `seed`; biases start at zero.
  [[nodiscard]] static WeightBundle seeded(const MpiDims& dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims.query_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    WeightBundle w;
    for (const auto& name : names()) {
      const auto [r, c] = expected_shapes(dims).at(name);
      Matrix m = Matrix::Zero(r, c);
      if (!is_bias(name)) {
        for (Eigen::Index i = 0; i < r; ++i) {
          for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
        }
      }
      w.set(name, std::move(m));
    }
    return w;
  }

  void set(const std::string& name, Matrix value) { params_[name] = std::move(value); }

  [[nodiscard]] const Matrix& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ShapeError("missing weight '" + name + "'");
    return it->second;
  }
  [[nodiscard]] Matrix& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ShapeError("missing weight '" + name + "'");
    return it->second;
  }
  [[nodiscard]] bool contains(const std::string& name) const { return params_.count(name) != 0; }
  [[nodiscard]] const std::map<std::string, Matrix>& entries() const noexcept { return params_; }

  // Dimensions implied by the stored shapes; throws ShapeError when the
  // bundle is incomplete, inconsistent or holds non-finite values.
  [[nodiscard]] MpiDims dims() const {
    using namespace weight_names;
    MpiDims d;
    d.query_dim = at(kMlpW).rows();
    d.modes = at(kHeadWScore).rows();
    if (d.query_dim < 1 || d.modes < 1) throw ShapeError("weight bundle has empty dimensions");
    const auto traj_rows = at(kHeadWTraj).rows();
    if (traj_rows % (2 * d.modes) != 0) throw ShapeError("head.W_traj rows are not a multiple of 2K");
    d.horizon = traj_rows / (2 * d.modes);
    const auto shapes = expected_shapes(d);
    for (const auto& [name, shape] : shapes) {
      const Matrix& m = at(name);
      if (m.rows() != shape.first || m.cols() != shape.second) {
        throw ShapeError("weight '" + name + "' has shape " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(shape.first) + "x" +
                         std::to_string(shape.second));
      }
      if (!m.allFinite()) throw ShapeError("weight '" + name + "' has non-finite entries");
    }
    if (params_.size() != shapes.size()) throw ShapeError("weight bundle has unexpected entries");
    return d;
  }

  friend bool operator==(const WeightBundle& a, const WeightBundle& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (const auto& [name, m] : a.params_) {
      auto it = b.params_.find(name);
      if (it == b.params_.end() || it->second.rows() != m.rows() || it->second.cols() != m.cols()) return false;
      if (!(it->second.array() == m.array()).all()) return false;
    }
    return true;
  }

 private:
  std::map<std::string, Matrix> params_;
};

namespace detail {

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector sigmoid(const Vector& v) { return v.unaryExpr([](double x) { return sigmoid(x); }); }

inline double activate(MlpActivation act, double x) noexcept {
  switch (act) {
    case MlpActivation::Identity:
      return x;
    case MlpActivation::Relu:
      return x > 0.0 ? x : 0.0;
    case MlpActivation::Tanh:
      return std::tanh(x);
  }
  return x;
}

inline double activate_grad(MlpActivation act, double pre) noexcept {
  switch (act) {
    case MlpActivation::Identity:
      return 1.0;
    case MlpActivation::Relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case MlpActivation::Tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace detail

// Row k = sigmoid(score_k) * act(W x_k + b).
[[nodiscard]] inline Matrix score_gate(const QueryBatch& batch, const WeightBundle& w,
                                       MlpActivation act = MlpActivation::Identity) {
  using namespace weight_names;
  const Matrix& W = w.at(kMlpW);
  const Matrix& b = w.at(kMlpB);
  detail::require(batch.size() >= 1, "query batch must hold at least one row");
  detail::require(batch.scores.size() == batch.rows.rows(), "query rows and scores differ in count");
  detail::require(batch.rows.cols() == W.cols() && W.rows() == W.cols(), "query width does not match mlp.W");
  detail::require(b.rows() == W.rows() && b.cols() == 1, "mlp.b shape mismatch");

  Matrix out(batch.rows.rows(), W.rows());
  for (Eigen::Index k = 0; k < batch.rows.rows(); ++k) {
    const Vector pre = W * batch.rows.row(k).transpose() + b.col(0);
    const double gate = detail::sigmoid(batch.scores(k));
    for (Eigen::Index j = 0; j < pre.size(); ++j) out(k, j) = gate * detail::activate(act, pre(j));
  }
  return out;
}

// Gate pre-activations and activations of one LSTM step, kept for backprop.
struct LstmStepCache {
  Vector x, h_prev, c_prev;
  Vector i, f, g, o, c, tanh_c, h;
};

[[nodiscard]] inline LstmStepCache lstm_step_cached(const Vector& x, const LstmState& state, const WeightBundle& w) {
  using namespace weight_names;
  const Matrix& W_ih = w.at(kLstmWih);
  const Matrix& W_hh = w.at(kLstmWhh);
  const Matrix& b = w.at(kLstmB);
  const Eigen::Index D = W_hh.cols();
  detail::require(W_ih.rows() == 4 * D && W_hh.rows() == 4 * D, "LSTM weights must have 4*D_q rows");
  detail::require(x.size() == W_ih.cols(), "LSTM input width mismatch");
  detail::require(state.h.size() == D && state.c.size() == D, "LSTM state width mismatch");
  detail::require(b.rows() == 4 * D && b.cols() == 1, "lstm.b shape mismatch");

  const Vector z = W_ih * x + W_hh * state.h + b.col(0);
  LstmStepCache cache;
  cache.x = x;
  cache.h_prev = state.h;
  cache.c_prev = state.c;
  cache.i = detail::sigmoid(Vector(z.segment(0, D)));
  cache.f = detail::sigmoid(Vector(z.segment(D, D)));
  cache.g = z.segment(2 * D, D).array().tanh();
  cache.o = detail::sigmoid(Vector(z.segment(3 * D, D)));
  cache.c = cache.f.cwiseProduct(state.c) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = cache.c.array().tanh();
  cache.h = cache.o.cwiseProduct(cache.tanh_c);
  return cache;
}

// Standard LSTM cell; the returned state's h is the cell output.
[[nodiscard]] inline LstmState lstm_step(const Vector& x, const LstmState& state, const WeightBundle& w) {
  auto cache = lstm_step_cached(x, state, w);
  return {std::move(cache.h), std::move(cache.c)};
}

// Mixes a sequence of historical query batches (oldest first). Each candidate
// row k runs its own LSTM from a zero state over the gated rows k of every
// frame; the final hidden states form the K x D_q result.
[[nodiscard]] inline Matrix mix_history(std::span<const QueryBatch> frames, const WeightBundle& w,
                                        MlpActivation act = MlpActivation::Identity) {
  if (frames.empty()) throw ShapeError("history must contain at least one frame");
  const Eigen::Index K = frames.front().size();
  std::vector<Matrix> gated;
  gated.reserve(frames.size());
  for (const auto& frame : frames) {
    detail::require(frame.size() == K, "all history frames must have the same number of candidates");
    gated.push_back(score_gate(frame, w, act));
  }
  const Eigen::Index D = w.at(weight_names::kLstmWhh).cols();
  Matrix out(K, D);
  for (Eigen::Index k = 0; k < K; ++k) {
    LstmState state = LstmState::zeros(D);
    for (const auto& g : gated) state = lstm_step(g.row(k).transpose(), state, w);
    out.row(k) = state.h.transpose();
  }
  return out;
}

[[nodiscard]] inline Matrix mix_history(const QueryBatch& history, const WeightBundle& w,
                                        MlpActivation act = MlpActivation::Identity) {
  return mix_history(std::span<const QueryBatch>(&history, 1), w, act);
}

// Numerically safe softmax (max-shifted).
[[nodiscard]] inline Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw ShapeError("softmax of an empty vector");
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

struct AttentionOutput {
  Vector output;   // D_q
  Vector weights;  // K, non-negative, sums to 1
};

// Single-head scaled dot-product attention of one query over K key/value rows.
[[nodiscard]] inline AttentionOutput cross_attention_detailed(const Vector& q, const Matrix& keys,
                                                              const Matrix& values, const WeightBundle& w) {
  using namespace weight_names;
  const Matrix& Wq = w.at(kAttnWq);
  const Matrix& Wk = w.at(kAttnWk);
  const Matrix& Wv = w.at(kAttnWv);
  const Matrix& Wo = w.at(kAttnWo);
  const Eigen::Index D = Wq.rows();
  detail::require(q.size() == Wq.cols() && keys.cols() == Wk.cols() && values.cols() == Wv.cols(),
                  "attention input width mismatch");
  detail::require(keys.rows() >= 1 && keys.rows() == values.rows(), "attention needs matching, non-empty keys/values");
  detail::require(Wk.rows() == D && Wv.rows() == D && Wo.cols() == D, "attention projection shape mismatch");

  const Vector qp = Wq * q;
  const Matrix kp = keys * Wk.transpose();    // K x D
  const Matrix vp = values * Wv.transpose();  // K x D
  const Vector logits = kp * qp / std::sqrt(static_cast<double>(D));
  AttentionOutput out;
  out.weights = softmax(logits);
  out.output = Wo * (vp.transpose() * out.weights);
  return out;
}

[[nodiscard]] inline Vector cross_attention(const Vector& q, const Matrix& keys, const Matrix& values,
                                            const WeightBundle& w) {
  return cross_attention_detailed(q, keys, values, w).output;
}

// Trajectories are K x (2 N_t): row k holds x0, y0, x1, y1, ...
struct PlanOutput {
  Matrix trajectories;
  Vector scores;
};

// Concatenates q with the mean-pooled instance features and applies the two
// affine heads. Zero instance rows pool to a zero vector.
[[nodiscard]] inline PlanOutput plan_head(const Vector& q, const Matrix& instance_features, const WeightBundle& w) {
  using namespace weight_names;
  const Matrix& Wt = w.at(kHeadWTraj);
  const Matrix& bt = w.at(kHeadBTraj);
  const Matrix& Ws = w.at(kHeadWScore);
  const Matrix& bs = w.at(kHeadBScore);
  const Eigen::Index D = q.size();
  detail::require(instance_features.rows() == 0 || instance_features.cols() == D, "instance feature width mismatch");
  detail::require(Wt.cols() == 2 * D && Ws.cols() == 2 * D, "plan head input width mismatch");
  detail::require(bt.rows() == Wt.rows() && bs.rows() == Ws.rows(), "plan head bias shape mismatch");
  detail::require(Wt.rows() % (2 * Ws.rows()) == 0, "head.W_traj rows must be K * N_t * 2");

  Vector z(2 * D);
  z.head(D) = q;
  if (instance_features.rows() > 0) {
    z.tail(D) = instance_features.colwise().mean().transpose();
  } else {
    z.tail(D).setZero();
  }
  const Vector flat = Wt * z + bt.col(0);
  const Eigen::Index K = Ws.rows();
  PlanOutput out;
  out.trajectories = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), K, flat.size() / K);
  out.scores = Ws * z + bs.col(0);
  return out;
}

struct MpiOptions {
  MlpActivation mlp_activation{MlpActivation::Identity};
};

// mix_history -> cross_attention(selected, mixed, mixed) -> plan_head.
[[nodiscard]] inline PlanOutput mpi_forward(const Vector& selected, std::span<const QueryBatch> history,
                                            const Matrix& instance_features, const WeightBundle& w,
                                            const MpiOptions& opts = {}) {
  const Matrix mixed = mix_history(history, w, opts.mlp_activation);
  const Vector enriched = cross_attention(selected, mixed, mixed, w);
  return plan_head(enriched, instance_features, w);
}

[[nodiscard]] inline PlanOutput mpi_forward(const Vector& selected, const QueryBatch& history,
                                            const Matrix& instance_features, const WeightBundle& w,
                                            const MpiOptions& opts = {}) {
  return mpi_forward(selected, std::span<const QueryBatch>(&history, 1), instance_features, w, opts);
}

}  // namespace momad
