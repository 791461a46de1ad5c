#include "lesionbench/losses.hpp"

#include <algorithm>

#include "lesionbench/numeric.hpp"

namespace lesionbench::losses {

void FocalParams::validate() const {
  require(alpha >= 0.0 && alpha <= 1.0, "focal: alpha must lie in [0,1]");
  require(gamma >= 0.0 && std::isfinite(gamma), "focal: gamma must be >= 0");
}

void DetectionLossWeights::validate() const {
  require(w_cls > 0.0 && w_box > 0.0 && w_ctr > 0.0, "detection loss weights must be positive");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ScalarLoss focal_loss(double logit, int label, const FocalParams& params) {
  require(std::isfinite(logit), "focal: logit must be finite");
  require(label == 0 || label == 1, "focal: label must be 0 or 1");
  const double sign = label == 1 ? 1.0 : -1.0;
  const double alpha_t = label == 1 ? params.alpha : 1.0 - params.alpha;
  const double pt_raw = sigmoid(sign * logit);
  const double qt_raw = sigmoid(-sign * logit);  // 1 - p_t without cancellation
  const double pt = std::clamp(pt_raw, kProbEps, 1.0 - kProbEps);
  const double qt = std::clamp(qt_raw, kProbEps, 1.0 - kProbEps);
  const double log_pt = std::log(pt);
  const double loss = -alpha_t * std::pow(qt, params.gamma) * log_pt;

  if (pt_raw != pt) return {loss, 0.0};
  // dp_t/dlogit = sign * p_t * q_t
  const double inner = -params.gamma * std::pow(qt, params.gamma) * pt * log_pt + std::pow(qt, params.gamma + 1.0);
  return {loss, -alpha_t * sign * inner};
}

namespace {

struct Overlap {
  std::array<double, 3> width;
  double volume;
};

Overlap overlap(const Box3D& a, const Box3D& b) {
  Overlap o{};
  o.volume = 1.0;
  for (int k = 0; k < 3; ++k) {
    o.width[k] = std::max(0.0, std::min(a.max[k], b.max[k]) - std::max(a.min[k], b.min[k]));
    o.volume *= o.width[k];
  }
  return o;
}

}  // namespace

double iou_3d(const Box3D& a, const Box3D& b) {
  const double inter = overlap(a, b).volume;
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

BoxLoss iou_loss(const Box3D& pred, const Box3D& gt) {
  require(pred.valid(), "iou_loss: predicted box must have positive extent");
  const Overlap o = overlap(pred, gt);
  const double inter = o.volume;
  const double vp = pred.volume();
  const double uni = vp + gt.volume() - inter;
  BoxLoss out{1.0 - inter / uni, {}};

  for (int k = 0; k < 3; ++k) {
    const int k1 = (k + 1) % 3;
    const int k2 = (k + 2) % 3;
    const double pred_face = pred.extent(k1) * pred.extent(k2);
    const double inter_face = o.width[k1] * o.width[k2];
    const bool overlapping = o.width[k] > 0.0;

    // min corner: pred extent shrinks as it grows; it bounds the overlap when >= gt.min
    const double dvp_min = -pred_face;
    const double di_min = (overlapping && pred.min[k] >= gt.min[k]) ? -inter_face : 0.0;
    // max corner
    const double dvp_max = pred_face;
    const double di_max = (overlapping && pred.max[k] <= gt.max[k]) ? inter_face : 0.0;

    auto d_loss = [&](double dvp, double di) {
      const double du = dvp - di;
      return -(di * uni - inter * du) / (uni * uni);
    };
    out.grad[k] = d_loss(dvp_min, di_min);
    out.grad[k + 3] = d_loss(dvp_max, di_max);
  }
  return out;
}

ScalarLoss centerness_bce(double logit, double target) {
  require(std::isfinite(logit), "centerness_bce: logit must be finite");
  require(target >= 0.0 && target <= 1.0, "centerness_bce: target must lie in [0,1]");
  const double p = std::clamp(sigmoid(logit), kProbEps, 1.0 - kProbEps);
  const double q = std::clamp(sigmoid(-logit), kProbEps, 1.0 - kProbEps);
  const double loss = -(target * std::log(p) + (1.0 - target) * std::log(q));
  return {loss, sigmoid(logit) - target};
}

double centerness_target(double l, double r, double t, double b) {
  require(l > 0.0 && r > 0.0 && t > 0.0 && b > 0.0, "centerness_target: distances must be > 0");
  return std::sqrt((std::min(l, r) / std::max(l, r)) * (std::min(t, b) / std::max(t, b)));
}

double detection_loss(const DetectionLossTerms& terms, const DetectionLossWeights& weights) {
  weights.validate();
  return weights.w_cls * compensated_mean(terms.cls) + weights.w_box * compensated_mean(terms.box) +
         weights.w_ctr * compensated_mean(terms.ctr);
}

}  // namespace lesionbench::losses
