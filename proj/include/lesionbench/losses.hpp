#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::losses {

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] before taking logs.
inline constexpr double kProbEps = 1e-12;

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
  void validate() const;
};

/// Detection head focal settings.
inline constexpr FocalParams kDetectionFocal{0.25, 2.0};
/// Patient-level classifier focal settings.
inline constexpr FocalParams kClassificationFocal{0.7, 3.0};

struct DetectionLossWeights {
  double w_cls = 1.0 / std::numbers::ln2;
  double w_box = 1.0;
  double w_ctr = 0.2;
  void validate() const;
};

struct ScalarLoss {
  double loss;
  double grad;  ///< d loss / d logit
};

struct BoxLoss {
  double loss;
  /// d loss / d pred corner, ordered x0,y0,z0,x1,y1,z1.
  std::array<double, 6> grad;
};

double sigmoid(double x);

/// -alpha_t (1 - p_t)^gamma log(p_t) with p = sigmoid(logit).
ScalarLoss focal_loss(double logit, int label, const FocalParams& params);

/// Intersection over union of two boxes; 0 for disjoint boxes.
double iou_3d(const Box3D& a, const Box3D& b);

/// 1 - IoU with the gradient w.r.t. the predicted box corners. Where a pred
/// face coincides with a gt face the pred face is treated as the binding one,
/// i.e. the derivative is the one-sided value for moving that face inwards.
BoxLoss iou_loss(const Box3D& pred, const Box3D& gt);

/// Binary cross-entropy against a soft target in [0,1].
ScalarLoss centerness_bce(double logit, double target);

/// sqrt(min(l,r)/max(l,r) * min(t,b)/max(t,b)).
double centerness_target(double l, double r, double t, double b);

/// Per-branch loss values for one batch. Empty branches contribute 0.
struct DetectionLossTerms {
  std::vector<double> cls;
  std::vector<double> box;
  std::vector<double> ctr;
};

/// w_cls * mean(cls) + w_box * mean(box) + w_ctr * mean(ctr).
double detection_loss(const DetectionLossTerms& terms, const DetectionLossWeights& weights = {});

}  // namespace lesionbench::losses
