#pragma once

#include <span>
#include <vector>

#include "lesionbench/class_metrics.hpp"
#include "lesionbench/core.hpp"

namespace lesionbench::dca {

struct DcaCurve {
  std::vector<double> thresholds;
  std::vector<double> nb_model;
  std::vector<double> nb_all;
  std::vector<double> nb_none;
  double prevalence = 0.0;
};

/// TP/n - FP/n * p/(1-p) for the given counts.
double net_benefit(const metrics::ConfusionCounts& counts, double threshold_prob);
/// Positive iff ensemble probability >= p.
double net_benefit(std::span<const PredictionRecord> records, double threshold_prob);

std::vector<double> default_grid();

DcaCurve dca_curve(std::span<const PredictionRecord> records, std::span<const double> grid);

}  // namespace lesionbench::dca
