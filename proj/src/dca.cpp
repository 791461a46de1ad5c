#include "lesionbench/dca.hpp"

#include "lesionbench/numeric.hpp"

namespace lesionbench::dca {

double net_benefit(const metrics::ConfusionCounts& counts, double threshold_prob) {
  require(threshold_prob > 0.0 && threshold_prob < 1.0, "net_benefit: threshold probability must lie in (0,1)");
  const auto n = static_cast<double>(counts.total());
  require(n > 0, "net_benefit: empty input");
  return static_cast<double>(counts.tp) / n -
         static_cast<double>(counts.fp) / n * (threshold_prob / (1.0 - threshold_prob));
}

double net_benefit(std::span<const PredictionRecord> records, double threshold_prob) {
  require(threshold_prob > 0.0 && threshold_prob < 1.0, "net_benefit: threshold probability must lie in (0,1)");
  return net_benefit(metrics::confusion_at(records, threshold_prob), threshold_prob);
}

std::vector<double> default_grid() { return parse_grid("0.01:0.99:0.01"); }

DcaCurve dca_curve(std::span<const PredictionRecord> records, std::span<const double> grid) {
  require(!records.empty(), "dca_curve: empty input");
  metrics::ConfusionCounts treat_all;
  for (const auto& r : records) (r.label == 1 ? treat_all.tp : treat_all.fp) += 1;

  DcaCurve c;
  c.prevalence = static_cast<double>(treat_all.tp) / static_cast<double>(records.size());
  for (double p : grid) {
    c.thresholds.push_back(p);
    c.nb_model.push_back(net_benefit(records, p));
    c.nb_all.push_back(net_benefit(treat_all, p));
    c.nb_none.push_back(0.0);
  }
  return c;
}

}  // namespace lesionbench::dca
