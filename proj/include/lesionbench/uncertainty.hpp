#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "lesionbench/class_metrics.hpp"
#include "lesionbench/core.hpp"

namespace lesionbench::uq {

struct UncertaintyScore {
  std::string patient_id;
  double ensemble_prob = 0.0;
  double variance = 0.0;  ///< population variance across folds
};

std::vector<UncertaintyScore> score_uncertainty(std::span<const PredictionRecord> records);

struct Stratification {
  std::vector<std::string> certain;    ///< CG, ordered by (variance, patient_id)
  std::vector<std::string> uncertain;  ///< UG, same order
};

/// CG = the round_half_even(f * n) lowest-variance patients, ties broken by
/// patient_id.
Stratification stratify(std::span<const UncertaintyScore> scores, double retained_fraction);

struct GroupEvaluation {
  std::size_t size = 0;
  metrics::ConfusionCounts counts;
  MaybeMetric auc;
  MaybeMetric balanced_accuracy;
};

struct StratifiedPoint {
  double retained_fraction = 0.0;
  GroupEvaluation certain;
  GroupEvaluation uncertain;
  std::vector<std::string> certain_ids;
};

struct StratifiedCurve {
  double threshold = 0.0;  ///< full-cohort Youden threshold, fixed across subsets
  std::vector<StratifiedPoint> points;
};

std::vector<double> default_fractions();

/// Per fraction, AUC and balanced accuracy with bootstrap CIs inside CG and
/// UG. Group g of point i bootstraps with seed derive_seed(cfg.seed, 2*i + g).
/// Metrics that cannot be computed in a subset are reported undefined.
StratifiedCurve uq_curve(std::span<const PredictionRecord> records, std::span<const double> fractions,
                         const metrics::BootstrapConfig& cfg);

}  // namespace lesionbench::uq
