#pragma once

// Training criteria: focal classification loss and the weighted stage
// losses of the two-stage schedule (perception, then perception + motion +
// planning).

#include <cmath>

#include "momad/error.hpp"

namespace momad {

// -alpha * (1 - p_t)^gamma * ln(p_t), p_t = prob for a positive target.
[[nodiscard]] inline double focal_loss(double prob, int target, double alpha = 0.25, double gamma = 2.0) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("focal loss probability must lie in (0, 1)");
  if (target != 0 && target != 1) throw DomainError("focal loss target must be 0 or 1");
  if (alpha < 0.0 || gamma < 0.0) throw DomainError("focal loss alpha and gamma must be non-negative");
  const double pt = target == 1 ? prob : 1.0 - prob;
  return -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
}

struct DetectionTerms {
  double cls{0.0};
  double reg{0.0};
};

struct MapTerms {
  double cls{0.0};
  double reg{0.0};
};

struct MotionTerms {
  double cls{0.0};
  double reg{0.0};
};

struct PlanTerms {
  double cls{0.0};
  double reg{0.0};
  double status{0.0};
};

struct LossWeights {
  double det_cls{2.0};
  double det_reg{0.25};
  double map_cls{1.0};
  double map_reg{10.0};
  double motion_cls{0.2};
  double motion_reg{0.2};
  double plan_cls{0.5};
  double plan_reg{1.0};
  double plan_status{1.0};

  void validate() const {
    for (double v : {det_cls, det_reg, map_cls, map_reg, motion_cls, motion_reg, plan_cls, plan_reg, plan_status}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be finite and non-negative");
    }
  }
};

struct StageLosses {
  double detection{0.0};
  double mapping{0.0};
  double motion_planning{0.0};
  double stage1{0.0};  // detection + mapping
  double stage2{0.0};  // detection + mapping + motion/planning
};

[[nodiscard]] inline StageLosses combined_losses(const DetectionTerms& det, const MapTerms& map,
                                                 const MotionTerms& motion, const PlanTerms& plan,
                                                 const LossWeights& w = {}) {
  w.validate();
  StageLosses out;
  out.detection = w.det_cls * det.cls + w.det_reg * det.reg;
  out.mapping = w.map_cls * map.cls + w.map_reg * map.reg;
  out.motion_planning = w.motion_cls * motion.cls + w.motion_reg * motion.reg + w.plan_cls * plan.cls +
                        w.plan_reg * plan.reg + w.plan_status * plan.status;
  out.stage1 = out.detection + out.mapping;
  out.stage2 = out.detection + out.mapping + out.motion_planning;
  return out;
}

}  // namespace momad
