#include "lesionbench/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lesionbench/losses.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench::calibration {

namespace {

constexpr double kClamp = 1e-6;
constexpr double kStepTolerance = 1e-10;
constexpr int kMaxIterations = 100;
constexpr double kSeparationSlope = 50.0;

double logit(double p) {
  const double c = std::clamp(p, kClamp, 1.0 - kClamp);
  return std::log(c / (1.0 - c));
}

// log(sigmoid(x)) without overflow
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

int bin_of(double p, int n_bins) {
  const int b = static_cast<int>(std::floor(p * n_bins));
  return std::clamp(b, 0, n_bins - 1);
}

struct Bins {
  std::vector<std::vector<double>> preds;
  std::vector<std::vector<int>> labels;
};

Bins bin_records(std::span<const PredictionRecord> records, int n_bins) {
  require(n_bins >= 1, "calibration: n_bins must be >= 1");
  Bins b;
  b.preds.resize(static_cast<std::size_t>(n_bins));
  b.labels.resize(static_cast<std::size_t>(n_bins));
  for (const auto& r : records) {
    const double p = r.ensemble_prob();
    const auto k = static_cast<std::size_t>(bin_of(p, n_bins));
    b.preds[k].push_back(p);
    b.labels[k].push_back(r.label);
  }
  return b;
}

}  // namespace

double brier(std::span<const PredictionRecord> records) {
  require(!records.empty(), "brier: empty input");
  std::vector<double> sq;
  sq.reserve(records.size());
  for (const auto& r : records) {
    const double d = r.ensemble_prob() - r.label;
    sq.push_back(d * d);
  }
  return compensated_mean(sq);
}

std::vector<CalibrationBin> calibration_curve(std::span<const PredictionRecord> records, int n_bins) {
  require(!records.empty(), "calibration_curve: empty input");
  const Bins bins = bin_records(records, n_bins);
  std::vector<CalibrationBin> curve;
  for (std::size_t k = 0; k < bins.preds.size(); ++k) {
    if (bins.preds[k].empty()) continue;
    const auto& lab = bins.labels[k];
    CalibrationBin bin;
    bin.count = lab.size();
    bin.mean_pred = compensated_mean(bins.preds[k]);
    bin.frac_pos = static_cast<double>(std::count(lab.begin(), lab.end(), 1)) / static_cast<double>(lab.size());
    curve.push_back(bin);
  }
  return curve;
}

BrierDecomposition brier_decomposition(std::span<const PredictionRecord> records, int n_bins) {
  require(!records.empty(), "brier_decomposition: empty input");
  const Bins bins = bin_records(records, n_bins);
  const auto n = static_cast<double>(records.size());
  double positives = 0.0;
  for (const auto& r : records) positives += r.label;
  const double base_rate = positives / n;

  BrierDecomposition d;
  d.uncertainty = base_rate * (1.0 - base_rate);
  for (std::size_t k = 0; k < bins.preds.size(); ++k) {
    const auto& f = bins.preds[k];
    const auto& o = bins.labels[k];
    if (f.empty()) continue;
    const auto nk = static_cast<double>(f.size());
    const double f_bar = compensated_mean(f);
    const double o_bar = static_cast<double>(std::count(o.begin(), o.end(), 1)) / nk;
    d.reliability += nk * (f_bar - o_bar) * (f_bar - o_bar);
    d.resolution += nk * (o_bar - base_rate) * (o_bar - base_rate);
    for (std::size_t i = 0; i < f.size(); ++i) {
      d.within_variance += (f[i] - f_bar) * (f[i] - f_bar);
      d.within_covariance += 2.0 * (f[i] - f_bar) * (o[i] - o_bar);
    }
  }
  d.reliability /= n;
  d.resolution /= n;
  d.within_variance /= n;
  d.within_covariance /= n;
  return d;
}

double recalibration_log_likelihood(std::span<const double> probs, std::span<const int> labels, double intercept,
                                    double slope) {
  double ll = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double eta = intercept + slope * logit(probs[i]);
    ll += labels[i] == 1 ? log_sigmoid(eta) : log_sigmoid(-eta);
  }
  return ll;
}

RecalibrationFit recalibration_fit(std::span<const double> probs, std::span<const int> labels) {
  require(probs.size() == labels.size(), "recalibration_fit: probs and labels differ in length");
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const auto n = static_cast<long long>(labels.size());
  require(n_pos > 0 && n_pos < n, "recalibration_fit: both classes must be present");

  std::vector<double> x(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) x[i] = logit(probs[i]);
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    const double prevalence = static_cast<double>(n_pos) / static_cast<double>(n);
    return {0.0, std::log(prevalence / (1.0 - prevalence)), 0};
  }

  double a = 0.0;
  double b = 1.0;
  double ll = recalibration_log_likelihood(probs, labels, a, b);
  std::ostringstream trace;
  for (int it = 1; it <= kMaxIterations; ++it) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double mu = losses::sigmoid(a + b * x[i]);
      const double w = mu * (1.0 - mu);
      const double r = labels[i] - mu;
      g0 += r;
      g1 += r * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !std::isfinite(det)) fail("recalibration_fit: singular information matrix; trace:" + trace.str());
    double da = (h11 * g0 - h01 * g1) / det;
    double db = (h00 * g1 - h01 * g0) / det;

    double step = 1.0;
    double a_new = a + da;
    double b_new = b + db;
    double ll_new = recalibration_log_likelihood(probs, labels, a_new, b_new);
    const double slack = 1e-12 * (1.0 + std::abs(ll));
    for (int h = 0; h < 60 && !(ll_new >= ll - slack); ++h) {
      step *= 0.5;
      a_new = a + step * da;
      b_new = b + step * db;
      ll_new = recalibration_log_likelihood(probs, labels, a_new, b_new);
    }
    const double change = std::max(std::abs(a_new - a), std::abs(b_new - b));
    a = a_new;
    b = b_new;
    ll = ll_new;
    trace << " [" << it << ": a=" << a << " b=" << b << " ll=" << ll << "]";
    if (std::abs(b) > kSeparationSlope) fail("recalibration_fit: separation (|slope| > 50); trace:" + trace.str());
    if (change < kStepTolerance) return {b, a, it};
  }
  fail("recalibration_fit: no convergence in 100 iterations; trace:" + trace.str());
}

RecalibrationFit recalibration_fit(std::span<const PredictionRecord> records) {
  std::vector<double> p;
  std::vector<int> y;
  for (const auto& r : records) {
    p.push_back(r.ensemble_prob());
    y.push_back(r.label);
  }
  return recalibration_fit(p, y);
}

CalibrationReport calibration_report(std::span<const PredictionRecord> records, int n_bins) {
  CalibrationReport rep;
  rep.brier = brier(records);
  rep.curve = calibration_curve(records, n_bins);
  rep.decomposition = brier_decomposition(records, n_bins);
  const RecalibrationFit fit = recalibration_fit(records);
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  return rep;
}

}  // namespace lesionbench::calibration
