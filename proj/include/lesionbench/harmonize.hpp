#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::harmonize {

/// Row-major n x d matrix of features with a site label per row.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::string> batch;      ///< per row
  std::vector<std::string> sample_ids;  ///< optional, per row when present
  std::vector<double> values;

  std::size_t rows() const { return batch.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }

  void validate() const;
};

enum class CombatMode { exact, empirical_bayes };

std::string to_string(CombatMode mode);
CombatMode parse_mode(const std::string& text);

/// Per-batch location/scale estimates and (in EB mode) the priors they were
/// shrunk towards. gamma/delta are the values applied by the transform;
/// delta is a scale (standard deviation), not a variance.
struct BatchParams {
  std::vector<double> gamma_hat;  ///< raw per-feature batch mean of standardized data
  std::vector<double> delta2_hat;  ///< raw per-feature batch variance (n-1 divisor)
  std::vector<double> gamma;
  std::vector<double> delta;
  double gamma_bar = 0.0;  ///< EB location prior mean
  double tau2 = 0.0;       ///< EB location prior variance
  double a_prior = 0.0;    ///< EB inverse-gamma shape
  double b_prior = 0.0;    ///< EB inverse-gamma scale
  int iterations = 0;
};

struct CombatModel {
  CombatMode mode = CombatMode::empirical_bayes;
  std::vector<std::string> feature_names;
  std::vector<double> grand_mean;
  /// Square root of the pooled within-batch variance (divisor n - n_batches).
  std::vector<double> pooled_std;
  std::map<std::string, BatchParams> batches;
};

/// Standardizes each feature by the grand mean and pooled std, then
/// estimates per-batch location and scale. EB mode applies parametric
/// shrinkage (iterated to max change < 1e-8, at most 500 rounds).
CombatModel combat_fit(const FeatureMatrix& x, CombatMode mode = CombatMode::empirical_bayes);

/// x* = pooled_std * (z - gamma) / delta + grand_mean.
FeatureMatrix combat_transform(const CombatModel& model, const FeatureMatrix& x);

// CSV with a `batch` column, an optional `sample_id` column, and numeric
// feature columns in any order. Written back as sample_id, batch, features.
FeatureMatrix parse_features(std::istream& in, const std::string& source = "<stream>");
FeatureMatrix read_features(const std::filesystem::path& path);
std::string format_features(const FeatureMatrix& x);

std::string model_to_json(const CombatModel& model);
CombatModel model_from_json(const std::string& text, const std::string& source = "<string>");

}  // namespace lesionbench::harmonize
