#include "lesionbench/class_metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "lesionbench/numeric.hpp"

namespace lesionbench::metrics {

ConfusionCounts confusion_at(std::span<const PredictionRecord> records, double threshold) {
  require(!records.empty(), "confusion_at: empty input");
  ConfusionCounts c;
  for (const auto& r : records) {
    const bool pred = r.ensemble_prob() >= threshold;
    if (r.label == 1) {
      (pred ? c.tp : c.fn) += 1;
    } else {
      (pred ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

namespace {

std::optional<double> ratio(long long num, long long den) {
  if (den <= 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

void split_scores(std::span<const PredictionRecord> records, std::vector<double>& scores, std::vector<int>& labels) {
  scores.clear();
  labels.clear();
  scores.reserve(records.size());
  labels.reserve(records.size());
  for (const auto& r : records) {
    scores.push_back(r.ensemble_prob());
    labels.push_back(r.label);
  }
}

}  // namespace

BasicMetrics basic_metrics(const ConfusionCounts& c) {
  BasicMetrics m;
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  if (m.sensitivity && m.specificity) m.balanced_accuracy = (*m.sensitivity + *m.specificity) / 2.0;
  if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0.0)
    m.f1 = 2.0 * (*m.precision * *m.sensitivity) / (*m.precision + *m.sensitivity);
  return m;
}

std::optional<double> auc_from_scores(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based) mid-ranks of positives, doubled to stay integral.
  long long rank_sum_x2 = 0;
  long long n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const auto twice_mid_rank = static_cast<long long>(i + 1 + j);  // 2 * (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_x2 += twice_mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const long long n_neg = static_cast<long long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const long long u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc(std::span<const PredictionRecord> records) {
  std::vector<double> scores;
  std::vector<int> labels;
  split_scores(records, scores, labels);
  const auto auc = auc_from_scores(scores, labels);
  require(auc.has_value(), "roc_auc: both classes must be present");
  return *auc;
}

std::vector<RocPoint> roc_curve(std::span<const PredictionRecord> records) {
  std::vector<double> scores;
  std::vector<int> labels;
  split_scores(records, scores, labels);
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const auto n_neg = static_cast<long long>(labels.size()) - n_pos;
  require(n_pos > 0 && n_neg > 0, "roc_curve: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> pts{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  long long tp = 0;
  long long fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                   static_cast<double>(tp) / static_cast<double>(n_pos), s});
  }
  return pts;
}

YoudenResult youden_threshold(std::span<const PredictionRecord> records) {
  std::vector<double> scores;
  std::vector<int> labels;
  split_scores(records, scores, labels);
  const long long n_pos = std::count(labels.begin(), labels.end(), 1);
  const long long n_neg = static_cast<long long>(labels.size()) - n_pos;
  require(n_pos > 0 && n_neg > 0, "youden_threshold: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Distinct ascending scores with counts of positives / negatives at or above each.
  std::vector<double> distinct;
  std::vector<long long> pos_at_or_above;
  std::vector<long long> neg_at_or_above;
  {
    long long pos_below = 0;
    long long neg_below = 0;
    std::size_t i = 0;
    while (i < order.size()) {
      const double s = scores[order[i]];
      distinct.push_back(s);
      pos_at_or_above.push_back(n_pos - pos_below);
      neg_at_or_above.push_back(n_neg - neg_below);
      while (i < order.size() && scores[order[i]] == s) {
        (labels[order[i]] == 1 ? pos_below : neg_below) += 1;
        ++i;
      }
    }
  }

  // J * P * N = tp * N + tn * P - P * N, compared exactly in integers.
  YoudenResult best{0.0, 0.0};
  long long best_score = std::numeric_limits<long long>::min();
  auto consider = [&](double threshold, long long tp, long long fp) {
    const long long tn = n_neg - fp;
    const long long score = tp * n_neg + tn * n_pos - n_pos * n_neg;
    if (score >= best_score) {
      best_score = score;
      best = {threshold,
              static_cast<double>(tp) / static_cast<double>(n_pos) + static_cast<double>(tn) / static_cast<double>(n_neg) - 1.0};
    }
  };
  consider(0.0, n_pos, n_neg);  // every ensemble probability is >= 0
  for (std::size_t k = 1; k < distinct.size(); ++k) {
    consider((distinct[k - 1] + distinct[k]) / 2.0, pos_at_or_above[k], neg_at_or_above[k]);
  }
  if (distinct.back() >= 1.0) {
    consider(1.0, pos_at_or_above.back(), neg_at_or_above.back());
  } else {
    consider(1.0, 0, 0);
  }
  return best;
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::auc: return "auc";
    case Statistic::balanced_accuracy: return "balanced_accuracy";
    case Statistic::sensitivity: return "sensitivity";
    case Statistic::specificity: return "specificity";
    case Statistic::precision: return "precision";
    case Statistic::f1: return "f1";
    case Statistic::accuracy: return "accuracy";
  }
  return "?";
}

Statistic parse_statistic(const std::string& name) {
  for (auto s : {Statistic::auc, Statistic::balanced_accuracy, Statistic::sensitivity, Statistic::specificity,
                 Statistic::precision, Statistic::f1, Statistic::accuracy}) {
    if (to_string(s) == name) return s;
  }
  fail("unknown statistic \"" + name + "\"");
}

std::optional<double> evaluate(Statistic s, std::span<const PredictionRecord> records, double threshold) {
  if (records.empty()) return std::nullopt;
  if (s == Statistic::auc) {
    std::vector<double> scores;
    std::vector<int> labels;
    split_scores(records, scores, labels);
    return auc_from_scores(scores, labels);
  }
  const BasicMetrics m = basic_metrics(confusion_at(records, threshold));
  switch (s) {
    case Statistic::balanced_accuracy: return m.balanced_accuracy;
    case Statistic::sensitivity: return m.sensitivity;
    case Statistic::specificity: return m.specificity;
    case Statistic::precision: return m.precision;
    case Statistic::f1: return m.f1;
    case Statistic::accuracy: return m.accuracy;
    case Statistic::auc: break;
  }
  return std::nullopt;
}

MaybeMetric bootstrap_ci(std::span<const PredictionRecord> records, const StatisticFn& statistic,
                         const BootstrapConfig& cfg) {
  require(cfg.n_resamples >= 0, "bootstrap: n_resamples must be >= 0");
  const auto full = statistic(records);
  if (!full) return std::nullopt;

  MetricResult out{*full, *full, *full, 0, 0};
  if (cfg.n_resamples == 0 || records.empty()) return out;

  const std::size_t n = records.size();
  std::vector<std::optional<double>> stats(static_cast<std::size_t>(cfg.n_resamples));
  parallel_for(stats.size(), cfg.threads, [&](std::size_t r) {
    Engine engine(derive_seed(cfg.seed, r));
    std::vector<PredictionRecord> sample;
    sample.reserve(n);
    for (std::size_t i = 0; i < n; ++i) sample.push_back(records[uniform_index(engine, n)]);
    stats[r] = statistic(sample);
  });

  std::vector<double> valid;
  valid.reserve(stats.size());
  for (const auto& s : stats) {
    if (s) valid.push_back(*s);
  }
  out.n_resamples = static_cast<int>(valid.size());
  out.n_skipped = cfg.n_resamples - out.n_resamples;
  require(2 * out.n_skipped <= cfg.n_resamples,
          "bootstrap: statistic undefined on " + std::to_string(out.n_skipped) + " of " +
              std::to_string(cfg.n_resamples) + " resamples (more than 50%)");
  std::sort(valid.begin(), valid.end());
  out.ci_low = percentile_sorted(valid, 2.5);
  out.ci_high = percentile_sorted(valid, 97.5);
  return out;
}

MaybeMetric bootstrap_ci(std::span<const PredictionRecord> records, Statistic statistic, double threshold,
                         const BootstrapConfig& cfg) {
  return bootstrap_ci(
      records, [&](std::span<const PredictionRecord> rs) { return evaluate(statistic, rs, threshold); }, cfg);
}

}  // namespace lesionbench::metrics
