#pragma once

// Reverse-mode gradients of the interactor with respect to every weight,
// hand-derived through the plan head, attention, LSTM (through time) and the
// score-gated affine map.

#include <cmath>
#include <span>
#include <vector>

#include "momad/interactor.hpp"

namespace momad {

struct MpiGradients {
  PlanOutput output;
  WeightBundle weights;  // same names and shapes as the parameters
};

// Gradients of a scalar loss whose partials with respect to the plan-head
// outputs are `d_traj` (K x 2N_t) and `d_scores` (K).
[[nodiscard]] inline MpiGradients mpi_backward(const Vector& selected, std::span<const QueryBatch> history,
                                               const Matrix& instance_features, const WeightBundle& w,
                                               const Matrix& d_traj, const Vector& d_scores,
                                               const MpiOptions& opts = {}) {
  using namespace weight_names;
  const MpiDims dims = w.dims();
  const Eigen::Index D = dims.query_dim;
  if (history.empty()) throw ShapeError("history must contain at least one frame");
  const Eigen::Index Kh = history.front().size();

  // Forward with caches.
  const Matrix& Wm = w.at(kMlpW);
  const Matrix& bm = w.at(kMlpB);
  std::vector<Matrix> pre(history.size());    // MLP pre-activations per frame
  std::vector<Vector> gates(history.size());  // sigmoid(score)
  std::vector<Matrix> gated(history.size());
  for (std::size_t t = 0; t < history.size(); ++t) {
    const auto& frame = history[t];
    if (frame.size() != Kh) throw ShapeError("all history frames must have the same number of candidates");
    gated[t] = score_gate(frame, w, opts.mlp_activation);
    pre[t] = (frame.rows * Wm.transpose()).rowwise() + bm.col(0).transpose();
    gates[t] = frame.scores.unaryExpr([](double s) { return detail::sigmoid(s); });
  }
  std::vector<std::vector<LstmStepCache>> caches(static_cast<std::size_t>(Kh));
  Matrix mixed(Kh, D);
  for (Eigen::Index k = 0; k < Kh; ++k) {
    LstmState state = LstmState::zeros(D);
    for (std::size_t t = 0; t < history.size(); ++t) {
      auto cache = lstm_step_cached(gated[t].row(k).transpose(), state, w);
      state = {cache.h, cache.c};
      caches[static_cast<std::size_t>(k)].push_back(std::move(cache));
    }
    mixed.row(k) = state.h.transpose();
  }

  const Matrix& Wq = w.at(kAttnWq);
  const Matrix& Wk = w.at(kAttnWk);
  const Matrix& Wv = w.at(kAttnWv);
  const Matrix& Wo = w.at(kAttnWo);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(D));
  const Vector qp = Wq * selected;
  const Matrix kp = mixed * Wk.transpose();
  const Matrix vp = mixed * Wv.transpose();
  const Vector alpha = softmax(Vector(kp * qp * inv_sqrt_d));
  const Vector ctx = vp.transpose() * alpha;
  const Vector enriched = Wo * ctx;

  MpiGradients out;
  out.output = plan_head(enriched, instance_features, w);
  Vector z(2 * D);
  z.head(D) = enriched;
  if (instance_features.rows() > 0) {
    z.tail(D) = instance_features.colwise().mean().transpose();
  } else {
    z.tail(D).setZero();
  }

  WeightBundle g = WeightBundle::zeros(dims);

  // Plan head.
  if (d_traj.rows() != dims.modes || d_traj.cols() != 2 * dims.horizon || d_scores.size() != dims.modes) {
    throw ShapeError("upstream gradient shape does not match the plan head output");
  }
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> d_traj_rm = d_traj;
  const Vector d_flat = Eigen::Map<const Vector>(d_traj_rm.data(), d_traj_rm.size());
  g.at(kHeadWTraj) = d_flat * z.transpose();
  g.at(kHeadBTraj) = d_flat;
  g.at(kHeadWScore) = d_scores * z.transpose();
  g.at(kHeadBScore) = d_scores;
  const Vector dz = w.at(kHeadWTraj).transpose() * d_flat + w.at(kHeadWScore).transpose() * d_scores;
  const Vector d_enriched = dz.head(D);

  // Attention.
  g.at(kAttnWo) = d_enriched * ctx.transpose();
  const Vector d_ctx = Wo.transpose() * d_enriched;
  const Vector d_alpha = vp * d_ctx;
  const Matrix d_vp = alpha * d_ctx.transpose();
  const Vector d_logits = alpha.cwiseProduct((d_alpha.array() - alpha.dot(d_alpha)).matrix());
  const Vector d_qp = kp.transpose() * d_logits * inv_sqrt_d;
  const Matrix d_kp = d_logits * qp.transpose() * inv_sqrt_d;
  g.at(kAttnWq) = d_qp * selected.transpose();
  g.at(kAttnWk) = d_kp.transpose() * mixed;
  g.at(kAttnWv) = d_vp.transpose() * mixed;
  const Matrix d_mixed = d_kp * Wk + d_vp * Wv;

  // LSTM through time, then gate and affine map.
  const Matrix& Wih = w.at(kLstmWih);
  const Matrix& Whh = w.at(kLstmWhh);
  Matrix& gWih = g.at(kLstmWih);
  Matrix& gWhh = g.at(kLstmWhh);
  Matrix& gb = g.at(kLstmB);
  Matrix& gWm = g.at(kMlpW);
  Matrix& gbm = g.at(kMlpB);
  for (Eigen::Index k = 0; k < Kh; ++k) {
    Vector dh = d_mixed.row(k).transpose();
    Vector dc = Vector::Zero(D);
    const auto& steps = caches[static_cast<std::size_t>(k)];
    for (std::size_t t = steps.size(); t-- > 0;) {
      const auto& s = steps[t];
      const Vector d_o = dh.cwiseProduct(s.tanh_c);
      dc += dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
      const Vector d_i = dc.cwiseProduct(s.g);
      const Vector d_g = dc.cwiseProduct(s.i);
      const Vector d_f = dc.cwiseProduct(s.c_prev);
      Vector d_gate(4 * D);
      d_gate.segment(0, D) = d_i.cwiseProduct((s.i.array() * (1.0 - s.i.array())).matrix());
      d_gate.segment(D, D) = d_f.cwiseProduct((s.f.array() * (1.0 - s.f.array())).matrix());
      d_gate.segment(2 * D, D) = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());
      d_gate.segment(3 * D, D) = d_o.cwiseProduct((s.o.array() * (1.0 - s.o.array())).matrix());
      gWih += d_gate * s.x.transpose();
      gWhh += d_gate * s.h_prev.transpose();
      gb.col(0) += d_gate;
      dc = dc.cwiseProduct(s.f);
      dh = Whh.transpose() * d_gate;

      const Vector d_x = Wih.transpose() * d_gate;
      Vector d_pre(D);
      for (Eigen::Index j = 0; j < D; ++j) {
        d_pre(j) = d_x(j) * gates[t](k) * detail::activate_grad(opts.mlp_activation, pre[t](k, j));
      }
      gWm += d_pre * history[t].rows.row(k);
      gbm.col(0) += d_pre;
    }
  }
  out.weights = std::move(g);
  return out;
}

// Gradients of L = ||trajectories||^2.
[[nodiscard]] inline MpiGradients trajectory_energy_gradients(const Vector& selected,
                                                              std::span<const QueryBatch> history,
                                                              const Matrix& instance_features, const WeightBundle& w,
                                                              const MpiOptions& opts = {}) {
  const PlanOutput fwd = mpi_forward(selected, history, instance_features, w, opts);
  return mpi_backward(selected, history, instance_features, w, 2.0 * fwd.trajectories,
                      Vector::Zero(fwd.scores.size()), opts);
}

}  // namespace momad
