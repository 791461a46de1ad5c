#include "lesionbench/detect_eval.hpp"

#include <algorithm>
#include <cmath>

#include "lesionbench/losses.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench::detect {

void DetectEvalConfig::validate() const {
  require(iou_threshold > 0.0 && iou_threshold < 1.0, "iou_threshold must lie in (0,1)");
  require(min_lesion_voxels >= 0, "min_lesion_voxels must be >= 0");
  require(voxel_volume_cm3 > 0.0 && std::isfinite(voxel_volume_cm3), "voxel_volume_cm3 must be > 0");
  require(min_score >= 0.0 && min_score <= 1.0, "min_score must lie in [0,1]");
  if (quartile_boundaries) {
    const auto& b = *quartile_boundaries;
    require(b[0] <= b[1] && b[1] <= b[2], "quartile_boundaries must be non-decreasing");
  }
}

CaseMatch match_case(const DetectionCase& c, const DetectEvalConfig& cfg) {
  std::vector<const GroundTruthLesion*> gts;
  for (const auto& g : c.ground_truth) {
    if (g.voxel_count >= cfg.min_lesion_voxels) gts.push_back(&g);
  }
  std::vector<const ScoredBox*> preds;
  for (const auto& p : c.predictions) {
    if (p.score >= cfg.min_score) preds.push_back(&p);
  }

  CaseMatch m;
  m.detected.assign(gts.size(), false);
  m.false_positive.assign(preds.size(), true);
  for (const auto* g : gts) m.retained_voxels.push_back(g->voxel_count);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    for (std::size_t i = 0; i < gts.size(); ++i) {
      if (losses::iou_3d(preds[j]->box, gts[i]->box) > cfg.iou_threshold) {
        m.detected[i] = true;
        m.false_positive[j] = false;
      }
    }
  }
  return m;
}

DetectionSummary summarize(std::span<const DetectionCase> cases, const DetectEvalConfig& cfg) {
  cfg.validate();
  require(!cases.empty(), "summarize: no cases");
  DetectionSummary s;
  s.n_images = static_cast<long long>(cases.size());

  std::vector<std::pair<double, bool>> lesions;  // (volume cm3, detected)
  for (const auto& c : cases) {
    const CaseMatch m = match_case(c, cfg);
    s.n_pred += static_cast<long long>(m.false_positive.size());
    s.n_fp += std::count(m.false_positive.begin(), m.false_positive.end(), true);
    for (std::size_t i = 0; i < m.detected.size(); ++i) {
      lesions.emplace_back(static_cast<double>(m.retained_voxels[i]) * cfg.voxel_volume_cm3, m.detected[i]);
      if (m.detected[i]) ++s.n_detected;
    }
  }
  s.n_gt = static_cast<long long>(lesions.size());
  require(s.n_gt > 0, "summarize: zero retained ground-truth lesions");

  s.detection_rate = static_cast<double>(s.n_detected) / static_cast<double>(s.n_gt);
  s.fpr_per_image = static_cast<double>(s.n_fp) / static_cast<double>(s.n_images);
  s.fpr_per_lesion = static_cast<double>(s.n_fp) / static_cast<double>(s.n_gt);

  if (cfg.quartile_boundaries) {
    s.boundaries_cm3 = *cfg.quartile_boundaries;
  } else {
    std::vector<double> vols;
    vols.reserve(lesions.size());
    for (const auto& l : lesions) vols.push_back(l.first);
    std::sort(vols.begin(), vols.end());
    s.boundaries_cm3 = {percentile_sorted(vols, 25.0), percentile_sorted(vols, 50.0), percentile_sorted(vols, 75.0)};
  }
  for (const auto& [vol, det] : lesions) {
    std::size_t q = 3;
    if (vol <= s.boundaries_cm3[0]) {
      q = 0;
    } else if (vol <= s.boundaries_cm3[1]) {
      q = 1;
    } else if (vol <= s.boundaries_cm3[2]) {
      q = 2;
    }
    ++s.per_quartile[q].total;
    if (det) ++s.per_quartile[q].detected;
  }
  for (auto& q : s.per_quartile) {
    if (q.total > 0) q.rate = static_cast<double>(q.detected) / static_cast<double>(q.total);
  }
  return s;
}

std::vector<SubsetSummary> cross_task(std::span<const DetectionCase> cases,
                                      const std::map<std::string, PatientOutcome>& outcomes,
                                      const DetectEvalConfig& cfg) {
  std::vector<DetectionCase> correct;
  std::vector<DetectionCase> cg_correct;
  for (const auto& c : cases) {
    const auto it = outcomes.find(c.image_id);
    require(it != outcomes.end(), "cross_task: unmapped image_id \"" + c.image_id + "\"");
    if (it->second.correct) {
      correct.push_back(c);
      if (it->second.in_cg) cg_correct.push_back(c);
    }
  }
  auto summary_of = [&](const std::string& name, std::span<const DetectionCase> subset) {
    require(!subset.empty(), "cross_task: empty subset \"" + name + "\"");
    return SubsetSummary{name, summarize(subset, cfg)};
  };
  return {summary_of("all", cases), summary_of("correct", correct), summary_of("cg_correct", cg_correct)};
}

}  // namespace lesionbench::detect
