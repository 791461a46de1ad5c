#include <algorithm>
#include <charconv>
#include <map>

#include "internal.hpp"
#include "lesionbench/calibration.hpp"
#include "lesionbench/class_metrics.hpp"
#include "lesionbench/dca.hpp"
#include "lesionbench/io.hpp"
#include "lesionbench/numeric.hpp"
#include "lesionbench/uncertainty.hpp"

namespace lesionbench::cli {

namespace {

/// "start:stop:step" or a comma-separated list.
std::vector<double> parse_values(const std::string& text, const std::string& flag) {
  if (text.find(':') != std::string::npos) return parse_grid(text);
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, next - pos);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      fail(flag + ": not a number: \"" + item + "\"");
    out.push_back(v);
    pos = next + 1;
  }
  return out;
}

json counts_json(const metrics::ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json bootstrap_json(int n, std::uint64_t seed) {
  return {{"n_resamples", n}, {"seed", seed}, {"method", "percentile"}, {"interval", 0.95}};
}

/// Bootstrap that reports a mostly-undefined statistic as undefined rather
/// than aborting the whole table.
MaybeMetric guarded(std::span<const PredictionRecord> recs, metrics::Statistic s, double t,
                    const metrics::BootstrapConfig& cfg) {
  if (!metrics::evaluate(s, recs, t)) return std::nullopt;
  try {
    return metrics::bootstrap_ci(recs, s, t, cfg);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::vector<PredictionRecord> load_predictions(const std::string& path, RunContext& ctx) {
  ctx.inputs.emplace_back(path);
  return io::read_predictions(path);
}

void add_pred_option(CLI::App* app, std::string& target) {
  app->add_option("--pred", target, "Prediction CSV")->required()->check(CLI::ExistingFile);
}

void add_bootstrap_option(CLI::App* app, int& target) {
  app->add_option("--bootstrap", target, "Bootstrap resamples")->capture_default_str()->check(CLI::Range(1, 1000000));
}

}  // namespace

Command add_eval_class(CLI::App& parent) {
  struct Opts {
    std::string pred;
    std::optional<double> threshold;
    bool youden = false;
    std::string by;
    int bootstrap = 1000;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("eval-class", "Classification metrics with bootstrap CIs");
  add_pred_option(app, o->pred);
  auto* t = app->add_option("--threshold", o->threshold, "Fixed operating threshold");
  auto* y = app->add_flag("--youden", o->youden, "Use the Youden-optimal threshold (default)");
  t->excludes(y);
  app->add_option("--by", o->by, "Also report per group")->check(CLI::IsMember({"site", "phase", "subgroup"}));
  add_bootstrap_option(app, o->bootstrap);
  app->add_option("--out", o->out, "Output JSON")->required();

  return {app, [o](RunContext& ctx) {
            const auto records = load_predictions(o->pred, ctx);
            double threshold = 0.0;
            std::string method;
            if (o->threshold) {
              require(std::isfinite(*o->threshold), "--threshold must be finite");
              threshold = *o->threshold;
              method = "fixed";
            } else {
              threshold = metrics::youden_threshold(records).threshold;
              method = "youden";
            }

            std::vector<std::pair<std::string, std::vector<PredictionRecord>>> groups{{"all", records}};
            if (!o->by.empty()) {
              std::map<std::string, std::vector<PredictionRecord>> by;
              for (const auto& r : records) {
                const std::string key = o->by == "site"    ? r.site
                                        : o->by == "phase" ? r.phase
                                                           : r.subgroup.value_or("unspecified");
                by[key].push_back(r);
              }
              for (auto& [k, v] : by) groups.emplace_back(k, std::move(v));
            }

            const metrics::Statistic stats[] = {metrics::Statistic::auc,         metrics::Statistic::balanced_accuracy,
                                                metrics::Statistic::sensitivity, metrics::Statistic::specificity,
                                                metrics::Statistic::precision,   metrics::Statistic::f1};
            const std::uint64_t base = ctx.module_seed();
            json rows = json::array();
            for (std::size_t g = 0; g < groups.size(); ++g) {
              const auto& recs = groups[g].second;
              const auto counts = metrics::confusion_at(recs, threshold);
              json m = json::object();
              for (std::size_t s = 0; s < std::size(stats); ++s) {
                metrics::BootstrapConfig cfg{o->bootstrap, derive_seed(base, g * 8 + s), ctx.threads};
                m[metrics::to_string(stats[s])] = metric_json(guarded(recs, stats[s], threshold, cfg));
              }
              rows.push_back({{"group", groups[g].first},
                              {"n", recs.size()},
                              {"n_pos", counts.tp + counts.fn},
                              {"n_neg", counts.tn + counts.fp},
                              {"confusion", counts_json(counts)},
                              {"metrics", std::move(m)}});
            }

            json doc = document("classification");
            doc["threshold"] = {{"value", threshold}, {"method", method}, {"rule", "positive iff probability >= threshold"}};
            doc["bootstrap"] = bootstrap_json(o->bootstrap, ctx.seed);
            doc["group_by"] = o->by.empty() ? json(nullptr) : json(o->by);
            doc["n"] = records.size();
            doc["rows"] = std::move(rows);
            write_json(o->out, doc);
            ctx.outputs.emplace_back(o->out);
            write_manifest(ctx, manifest_path_for(o->out));
          }};
}

Command add_eval_uq(CLI::App& parent) {
  struct Opts {
    std::string pred;
    std::string fractions = "0.1:0.9:0.1";
    int bootstrap = 1000;
    std::string out;
    std::string svg;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("eval-uq", "Certain/uncertain group stratified curves");
  add_pred_option(app, o->pred);
  app->add_option("--fractions", o->fractions, "Retained fractions, start:stop:step or a,b,c")->capture_default_str();
  add_bootstrap_option(app, o->bootstrap);
  app->add_option("--out", o->out, "Output JSON")->required();
  app->add_option("--svg", o->svg, "Optional SVG plot");

  return {app, [o](RunContext& ctx) {
            const auto records = load_predictions(o->pred, ctx);
            const auto fractions = parse_values(o->fractions, "--fractions");
            for (std::size_t i = 1; i < fractions.size(); ++i)
              require(fractions[i] > fractions[i - 1], "--fractions must be strictly increasing");
            const metrics::BootstrapConfig cfg{o->bootstrap, ctx.module_seed(), ctx.threads};
            const auto curve = uq::uq_curve(records, fractions, cfg);

            auto group_json = [](const uq::GroupEvaluation& g) {
              return json{{"size", g.size},
                          {"confusion", counts_json(g.counts)},
                          {"auc", metric_json(g.auc)},
                          {"balanced_accuracy", metric_json(g.balanced_accuracy)}};
            };
            json points = json::array();
            for (const auto& p : curve.points) {
              points.push_back({{"retained_fraction", p.retained_fraction},
                                {"certain", group_json(p.certain)},
                                {"uncertain", group_json(p.uncertain)},
                                {"certain_ids", p.certain_ids}});
            }
            json patients = json::array();
            for (const auto& s : uq::score_uncertainty(records)) {
              patients.push_back({{"patient_id", s.patient_id}, {"ensemble_prob", s.ensemble_prob}, {"variance", s.variance}});
            }

            json doc = document("uncertainty");
            doc["threshold"] = curve.threshold;
            doc["n"] = records.size();
            doc["bootstrap"] = bootstrap_json(o->bootstrap, ctx.seed);
            doc["points"] = std::move(points);
            doc["patients"] = std::move(patients);
            write_json(o->out, doc);
            ctx.outputs.emplace_back(o->out);
            if (!o->svg.empty()) {
              write_file(o->svg, plot_uncertainty(doc));
              ctx.outputs.emplace_back(o->svg);
            }
            write_manifest(ctx, manifest_path_for(o->out));
          }};
}

Command add_eval_cal(CLI::App& parent) {
  struct Opts {
    std::string pred;
    int bins = 10;
    std::string out;
    std::string svg;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("eval-cal", "Brier score, reliability curve, recalibration slope/intercept");
  add_pred_option(app, o->pred);
  app->add_option("--bins", o->bins, "Equal-width bins")->capture_default_str()->check(CLI::Range(1, 1000));
  app->add_option("--out", o->out, "Output JSON")->required();
  app->add_option("--svg", o->svg, "Optional SVG plot");

  return {app, [o](RunContext& ctx) {
            const auto records = load_predictions(o->pred, ctx);
            json doc = document("calibration");
            doc["n"] = records.size();
            doc["n_bins"] = o->bins;
            doc["brier"] = calibration::brier(records);
            try {
              const auto fit = calibration::recalibration_fit(records);
              doc["slope"] = fit.slope;
              doc["intercept"] = fit.intercept;
              doc["iterations"] = fit.iterations;
            } catch (const ValidationError& e) {
              // Degenerate fits (separation, single class) leave the rest of the report usable.
              doc["slope"] = "undefined";
              doc["intercept"] = "undefined";
              doc["recalibration_error"] = e.what();
            }
            const auto d = calibration::brier_decomposition(records, o->bins);
            doc["decomposition"] = {{"reliability", d.reliability},
                                    {"resolution", d.resolution},
                                    {"uncertainty", d.uncertainty},
                                    {"within_variance", d.within_variance},
                                    {"within_covariance", d.within_covariance}};
            json curve = json::array();
            for (const auto& b : calibration::calibration_curve(records, o->bins))
              curve.push_back({{"mean_pred", b.mean_pred}, {"frac_pos", b.frac_pos}, {"count", b.count}});
            doc["curve"] = std::move(curve);
            write_json(o->out, doc);
            ctx.outputs.emplace_back(o->out);
            if (!o->svg.empty()) {
              write_file(o->svg, plot_calibration(doc));
              ctx.outputs.emplace_back(o->svg);
            }
            write_manifest(ctx, manifest_path_for(o->out));
          }};
}

Command add_eval_dca(CLI::App& parent) {
  struct Opts {
    std::string pred;
    std::string grid = "0.01:0.99:0.01";
    std::string out;
    std::string svg;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("eval-dca", "Decision curve analysis");
  add_pred_option(app, o->pred);
  app->add_option("--grid", o->grid, "Threshold probabilities, start:stop:step or a,b,c")->capture_default_str();
  app->add_option("--out", o->out, "Output JSON")->required();
  app->add_option("--svg", o->svg, "Optional SVG plot");

  return {app, [o](RunContext& ctx) {
            const auto records = load_predictions(o->pred, ctx);
            const auto grid = parse_values(o->grid, "--grid");
            const auto c = dca::dca_curve(records, grid);
            json doc = document("dca");
            doc["n"] = records.size();
            doc["prevalence"] = c.prevalence;
            doc["thresholds"] = c.thresholds;
            doc["net_benefit"] = {{"model", c.nb_model}, {"treat_all", c.nb_all}, {"treat_none", c.nb_none}};
            write_json(o->out, doc);
            ctx.outputs.emplace_back(o->out);
            if (!o->svg.empty()) {
              write_file(o->svg, plot_dca(doc));
              ctx.outputs.emplace_back(o->svg);
            }
            write_manifest(ctx, manifest_path_for(o->out));
          }};
}

}  // namespace lesionbench::cli
