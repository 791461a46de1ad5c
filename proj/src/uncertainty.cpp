#include "lesionbench/uncertainty.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "lesionbench/numeric.hpp"

namespace lesionbench::uq {

std::vector<UncertaintyScore> score_uncertainty(std::span<const PredictionRecord> records) {
  std::vector<UncertaintyScore> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    require(r.fold_probs.size() >= 2,
            "score_uncertainty: patient " + r.patient_id + " has fewer than 2 fold probabilities");
    // Sorting makes the reduction independent of fold order.
    std::vector<double> p = r.fold_probs;
    std::sort(p.begin(), p.end());
    if (p.front() == p.back()) {
      out.push_back({r.patient_id, r.ensemble_prob(), 0.0});
      continue;
    }
    const double mean = compensated_mean(p);
    std::vector<double> sq(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) sq[i] = (p[i] - mean) * (p[i] - mean);
    std::sort(sq.begin(), sq.end());
    out.push_back({r.patient_id, r.ensemble_prob(), compensated_mean(sq)});
  }
  return out;
}

Stratification stratify(std::span<const UncertaintyScore> scores, double retained_fraction) {
  require(retained_fraction > 0.0 && retained_fraction < 1.0, "stratify: retained fraction must lie in (0,1)");
  std::vector<const UncertaintyScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const UncertaintyScore* a, const UncertaintyScore* b) {
    if (a->variance != b->variance) return a->variance < b->variance;
    return a->patient_id < b->patient_id;
  });
  const auto n_cg = static_cast<std::size_t>(
      std::clamp<long long>(round_half_even(retained_fraction * static_cast<double>(scores.size())), 0,
                            static_cast<long long>(scores.size())));
  Stratification out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_cg ? out.certain : out.uncertain).push_back(order[i]->patient_id);
  }
  return out;
}

std::vector<double> default_fractions() { return parse_grid("0.1:0.9:0.1"); }

namespace {

MaybeMetric safe_bootstrap(std::span<const PredictionRecord> records, metrics::Statistic stat, double threshold,
                           const metrics::BootstrapConfig& cfg) {
  if (records.empty()) return std::nullopt;
  try {
    return metrics::bootstrap_ci(records, stat, threshold, cfg);
  } catch (const ValidationError&) {
    // Too many undefined resamples in a small subset.
    return std::nullopt;
  }
}

GroupEvaluation evaluate_group(std::span<const PredictionRecord> records, double threshold,
                               const metrics::BootstrapConfig& cfg) {
  GroupEvaluation g;
  g.size = records.size();
  if (!records.empty()) g.counts = metrics::confusion_at(records, threshold);
  g.auc = safe_bootstrap(records, metrics::Statistic::auc, threshold, cfg);
  g.balanced_accuracy = safe_bootstrap(records, metrics::Statistic::balanced_accuracy, threshold, cfg);
  return g;
}

}  // namespace

StratifiedCurve uq_curve(std::span<const PredictionRecord> records, std::span<const double> fractions,
                         const metrics::BootstrapConfig& cfg) {
  for (std::size_t i = 1; i < fractions.size(); ++i)
    require(fractions[i] > fractions[i - 1], "uq_curve: fractions must be strictly increasing");
  const auto scores = score_uncertainty(records);
  StratifiedCurve curve;
  curve.threshold = metrics::youden_threshold(records).threshold;

  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.patient_id, &r);
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<PredictionRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(*by_id.at(id));
    return out;
  };

  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const Stratification strat = stratify(scores, fractions[i]);
    StratifiedPoint pt;
    pt.retained_fraction = fractions[i];
    metrics::BootstrapConfig cg_cfg = cfg;
    metrics::BootstrapConfig ug_cfg = cfg;
    cg_cfg.seed = derive_seed(cfg.seed, 2 * i);
    ug_cfg.seed = derive_seed(cfg.seed, 2 * i + 1);
    pt.certain = evaluate_group(gather(strat.certain), curve.threshold, cg_cfg);
    pt.uncertain = evaluate_group(gather(strat.uncertain), curve.threshold, ug_cfg);
    pt.certain_ids = strat.certain;
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

}  // namespace lesionbench::uq
