#include <cmath>
#include <cstdio>
#include <limits>

#include "internal.hpp"
#include "lesionbench/svg.hpp"

namespace lesionbench::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double field_or_nan(const json& metric, const char* key) {
  return metric.is_object() && metric.contains(key) ? metric[key].get<double>() : kNaN;
}

std::string cell(const json& metric) {
  if (!metric.is_object()) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f-%.2f)", metric["value"].get<double>(), metric["ci_low"].get<double>(),
                metric["ci_high"].get<double>());
  return buf;
}

}  // namespace

std::string plot_classification(const json& doc) {
  const std::vector<std::string> header = {"Group", "n", "AUC", "Bal. acc.", "Sensitivity", "Specificity",
                                           "Precision", "F1"};
  const char* keys[] = {"auc", "balanced_accuracy", "sensitivity", "specificity", "precision", "f1"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : doc.at("rows")) {
    std::vector<std::string> row = {r.at("group").get<std::string>(), std::to_string(r.at("n").get<long long>())};
    for (const char* k : keys) row.push_back(cell(r.at("metrics").at(k)));
    rows.push_back(std::move(row));
  }
  char title[96];
  std::snprintf(title, sizeof title, "Classification metrics at threshold %.4f", doc.at("threshold").at("value").get<double>());
  return svg::table(title, header, rows);
}

std::string plot_uncertainty(const json& doc) {
  struct Spec {
    const char* group;
    const char* metric;
    const char* label;
    const char* color;
    bool dashed;
  };
  const Spec specs[] = {{"certain", "auc", "CG AUC", "#1f77b4", false},
                        {"uncertain", "auc", "UG AUC", "#1f77b4", true},
                        {"certain", "balanced_accuracy", "CG bal. acc.", "#ff7f0e", false},
                        {"uncertain", "balanced_accuracy", "UG bal. acc.", "#ff7f0e", true}};
  std::vector<svg::Series> series;
  for (const auto& sp : specs) {
    svg::Series s;
    s.label = sp.label;
    s.color = sp.color;
    s.dashed = sp.dashed;
    s.markers = true;
    for (const auto& p : doc.at("points")) {
      const json& m = p.at(sp.group).at(sp.metric);
      s.x.push_back(p.at("retained_fraction").get<double>());
      s.y.push_back(field_or_nan(m, "value"));
      s.band_lo.push_back(field_or_nan(m, "ci_low"));
      s.band_hi.push_back(field_or_nan(m, "ci_high"));
    }
    series.push_back(std::move(s));
  }
  svg::Axes a;
  a.title = "Certain vs uncertain group performance";
  a.x_label = "Retained fraction (certain group)";
  a.y_label = "Metric value";
  return svg::line_plot(a, series);
}

std::string plot_calibration(const json& doc) {
  svg::Series diag{"Perfect calibration", {0.0, 1.0}, {0.0, 1.0}, "#7f7f7f", true, false, {}, {}};
  svg::Series obs;
  obs.label = "Observed";
  obs.color = "#d62728";
  obs.markers = true;
  for (const auto& b : doc.at("curve")) {
    obs.x.push_back(b.at("mean_pred").get<double>());
    obs.y.push_back(b.at("frac_pos").get<double>());
  }
  svg::Axes a;
  char title[96];
  std::snprintf(title, sizeof title, "Reliability diagram (Brier %.3f)", doc.at("brier").get<double>());
  a.title = title;
  a.x_label = "Mean predicted probability";
  a.y_label = "Observed fraction positive";
  return svg::line_plot(a, {diag, obs});
}

std::string plot_dca(const json& doc) {
  const auto t = doc.at("thresholds").get<std::vector<double>>();
  const json& nb = doc.at("net_benefit");
  svg::Series model{"Model", t, nb.at("model").get<std::vector<double>>(), "#1f77b4", false, false, {}, {}};
  svg::Series all{"Treat all", t, nb.at("treat_all").get<std::vector<double>>(), "#2ca02c", true, false, {}, {}};
  svg::Series none{"Treat none", t, nb.at("treat_none").get<std::vector<double>>(), "#000000", false, false, {}, {}};
  svg::Axes a;
  a.title = "Decision curve";
  a.x_label = "Threshold probability";
  a.y_label = "Net benefit";
  a.y_min = -0.05;
  a.y_max = std::max(0.05, doc.at("prevalence").get<double>() * 1.1);
  return svg::line_plot(a, {model, all, none});
}

std::string plot_detection(const json& doc) {
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"};
  std::vector<svg::BarGroup> groups;
  std::size_t i = 0;
  for (const auto& s : doc.at("subsets")) {
    svg::BarGroup g;
    g.name = s.at("name").get<std::string>();
    g.color = colors[i++ % 4];
    for (const auto& q : s.at("quartiles")) {
      svg::Bar b;
      b.label = q.at("quartile").get<std::string>();
      b.value = q.at("rate").is_number() ? 100.0 * q.at("rate").get<double>() : 0.0;
      b.annotation = std::to_string(q.at("detected").get<long long>()) + "/" +
                     std::to_string(q.at("total").get<long long>());
      g.bars.push_back(std::move(b));
    }
    groups.push_back(std::move(g));
  }
  svg::Axes a;
  a.title = "Detection rate by lesion volume quartile";
  a.x_label = "Volume quartile";
  a.y_label = "Detection rate (%)";
  a.y_max = 100.0;
  return svg::bar_chart(a, groups);
}

}  // namespace lesionbench::cli
