#pragma once

#include <span>
#include <string>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::calibration {

struct CalibrationBin {
  double mean_pred = 0.0;
  double frac_pos = 0.0;
  std::size_t count = 0;
};

/// Brier score decomposed over a binned partition. With within-bin forecast
/// spread the classic reliability - resolution + uncertainty identity needs
/// the two within-bin correction terms:
///   brier = reliability - resolution + uncertainty + within_variance - within_covariance
struct BrierDecomposition {
  double reliability = 0.0;
  double resolution = 0.0;
  double uncertainty = 0.0;
  double within_variance = 0.0;
  double within_covariance = 0.0;
};

struct RecalibrationFit {
  double slope = 1.0;
  double intercept = 0.0;
  int iterations = 0;
};

struct CalibrationReport {
  double brier = 0.0;
  double slope = 1.0;
  double intercept = 0.0;
  std::vector<CalibrationBin> curve;
  BrierDecomposition decomposition;
};

double brier(std::span<const PredictionRecord> records);

/// Equal-width bins on [0,1]; a probability of exactly 1 falls in the last
/// bin. Empty bins are omitted.
std::vector<CalibrationBin> calibration_curve(std::span<const PredictionRecord> records, int n_bins = 10);

BrierDecomposition brier_decomposition(std::span<const PredictionRecord> records, int n_bins = 10);

/// Logistic recalibration label ~ Bernoulli(sigmoid(a + b * logit(p))) fitted
/// by Newton-Raphson with step halving from (a, b) = (0, 1). Probabilities
/// are clamped to [1e-6, 1 - 1e-6]. A constant covariate yields b = 0 and
/// a = logit(prevalence).
RecalibrationFit recalibration_fit(std::span<const double> probs, std::span<const int> labels);
RecalibrationFit recalibration_fit(std::span<const PredictionRecord> records);

/// Bernoulli log-likelihood of the recalibration model.
double recalibration_log_likelihood(std::span<const double> probs, std::span<const int> labels, double intercept,
                                    double slope);

CalibrationReport calibration_report(std::span<const PredictionRecord> records, int n_bins = 10);

}  // namespace lesionbench::calibration
