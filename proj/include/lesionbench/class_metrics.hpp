#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::metrics {

struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Undefined metrics (empty denominator) are std::nullopt.
struct BasicMetrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> balanced_accuracy;
  std::optional<double> precision;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;  ///< predicted positive iff score >= threshold; +inf for the origin
};

/// Predicted positive iff ensemble probability >= threshold.
ConfusionCounts confusion_at(std::span<const PredictionRecord> records, double threshold);
BasicMetrics basic_metrics(const ConfusionCounts& c);

/// Mann-Whitney AUC with half credit for ties. Throws on single-class input.
double roc_auc(std::span<const PredictionRecord> records);
/// Same statistic on raw scores; nullopt when either class is absent.
std::optional<double> auc_from_scores(std::span<const double> scores, std::span<const int> labels);

std::vector<RocPoint> roc_curve(std::span<const PredictionRecord> records);

struct YoudenResult {
  double threshold;
  double j;
};

/// Maximises J = sensitivity + specificity - 1 over cut-points {0, 1, midpoints
/// between adjacent distinct scores}; ties go to the larger threshold.
YoudenResult youden_threshold(std::span<const PredictionRecord> records);

enum class Statistic { auc, balanced_accuracy, sensitivity, specificity, precision, f1, accuracy };

std::string to_string(Statistic s);
Statistic parse_statistic(const std::string& name);
/// Threshold-dependent statistics use `threshold`; AUC ignores it.
std::optional<double> evaluate(Statistic s, std::span<const PredictionRecord> records, double threshold);

using StatisticFn = std::function<std::optional<double>(std::span<const PredictionRecord>)>;

struct BootstrapConfig {
  int n_resamples = 1000;
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Patient-level percentile bootstrap (2.5th / 97.5th percentiles, linear
/// interpolation). Resample r draws with replacement from a Engine seeded
/// with derive_seed(seed, r). Undefined resamples are skipped and counted;
/// more than half undefined is an error. nullopt if the statistic is
/// undefined on the full sample.
MaybeMetric bootstrap_ci(std::span<const PredictionRecord> records, const StatisticFn& statistic,
                         const BootstrapConfig& cfg);
MaybeMetric bootstrap_ci(std::span<const PredictionRecord> records, Statistic statistic, double threshold,
                         const BootstrapConfig& cfg);

}  // namespace lesionbench::metrics
