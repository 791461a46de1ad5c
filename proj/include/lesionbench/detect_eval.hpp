#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::detect {

struct DetectEvalConfig {
  double iou_threshold = 0.025;
  std::int64_t min_lesion_voxels = 50;
  double voxel_volume_cm3 = 0.0025;  // 1 x 1 x 2.5 mm
  /// Volume quartile cut points in cm3; computed from the evaluated lesions when absent.
  std::optional<std::array<double, 3>> quartile_boundaries;
  /// Predictions scoring below this are dropped before matching.
  double min_score = 0.0;

  void validate() const;
};

struct CaseMatch {
  std::vector<bool> detected;  ///< per retained GT lesion
  std::vector<bool> false_positive;  ///< per (score-filtered) prediction
  std::vector<std::int64_t> retained_voxels;  ///< voxel counts of the retained GT lesions
};

/// GT lesions below min_lesion_voxels are dropped first. A lesion is detected
/// iff some prediction has IoU > threshold with it; a prediction is a false
/// positive iff its IoU with every retained lesion is <= threshold.
CaseMatch match_case(const DetectionCase& c, const DetectEvalConfig& cfg);

struct QuartileRate {
  long long detected = 0;
  long long total = 0;
  std::optional<double> rate;
};

struct DetectionSummary {
  long long n_images = 0;
  long long n_gt = 0;
  long long n_pred = 0;
  long long n_detected = 0;
  long long n_fp = 0;
  double detection_rate = 0.0;
  double fpr_per_image = 0.0;
  double fpr_per_lesion = 0.0;
  std::array<QuartileRate, 4> per_quartile{};
  std::array<double, 3> boundaries_cm3{};
};

/// Quartiles: Q1 <= b1 < Q2 <= b2 < Q3 <= b3 < Q4.
DetectionSummary summarize(std::span<const DetectionCase> cases, const DetectEvalConfig& cfg);

struct PatientOutcome {
  bool correct = false;
  bool in_cg = false;
};

struct SubsetSummary {
  std::string name;  ///< "all", "correct", "cg_correct"
  DetectionSummary summary;
};

/// Summaries over all cases, correctly classified cases, and correctly
/// classified certain-group cases. image_id must key into `outcomes`.
std::vector<SubsetSummary> cross_task(std::span<const DetectionCase> cases,
                                      const std::map<std::string, PatientOutcome>& outcomes,
                                      const DetectEvalConfig& cfg);

}  // namespace lesionbench::detect
