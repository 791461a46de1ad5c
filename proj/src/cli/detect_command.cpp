#include <cmath>
#include <set>

#include "internal.hpp"
#include "lesionbench/class_metrics.hpp"
#include "lesionbench/detect_eval.hpp"
#include "lesionbench/io.hpp"
#include "lesionbench/uncertainty.hpp"

namespace lesionbench::cli {

namespace {

json summary_json(const std::string& name, const detect::DetectionSummary& s) {
  json quartiles = json::array();
  const char* names[] = {"Q1", "Q2", "Q3", "Q4"};
  for (std::size_t q = 0; q < 4; ++q) {
    const auto& r = s.per_quartile[q];
    quartiles.push_back({{"quartile", names[q]}, {"detected", r.detected}, {"total", r.total}, {"rate", optional_json(r.rate)}});
  }
  return {{"name", name},
          {"n_images", s.n_images},
          {"n_gt", s.n_gt},
          {"n_pred", s.n_pred},
          {"n_detected", s.n_detected},
          {"n_fp", s.n_fp},
          {"detection_rate", s.detection_rate},
          {"fpr_per_image", s.fpr_per_image},
          {"fpr_per_lesion", s.fpr_per_lesion},
          {"boundaries_cm3", s.boundaries_cm3},
          {"quartiles", std::move(quartiles)}};
}

/// certain_ids of the uncertainty document's point at `fraction`.
std::set<std::string> cg_from_document(const json& doc, double fraction, const std::string& path) {
  std::string available;
  for (const auto& p : doc.at("points")) {
    const double f = p.at("retained_fraction").get<double>();
    if (std::abs(f - fraction) < 1e-9) {
      const auto ids = p.at("certain_ids").get<std::vector<std::string>>();
      return {ids.begin(), ids.end()};
    }
    available += (available.empty() ? "" : ", ") + io::format_double(f);
  }
  fail(path + ": no retained fraction " + io::format_double(fraction) + " (available: " + available + ")");
}

}  // namespace

Command add_eval_detect(CLI::App& parent) {
  struct Opts {
    std::string det;
    std::string class_csv;
    std::string uq;
    std::optional<double> threshold;
    double cg_fraction = 0.8;
    detect::DetectEvalConfig cfg;
    std::vector<double> boundaries;
    std::string out;
    std::string svg;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("eval-detect", "Lesion-level detection scoring");
  app->add_option("--det", o->det, "Detection JSON")->required()->check(CLI::ExistingFile);
  auto* cls = app->add_option("--class", o->class_csv, "Prediction CSV for cross-task subsets")->check(CLI::ExistingFile);
  app->add_option("--uq", o->uq, "eval-uq output supplying the certain group")->check(CLI::ExistingFile)->needs(cls);
  app->add_option("--threshold", o->threshold, "Classification threshold (default: from --uq, else Youden)")->needs(cls);
  app->add_option("--cg-fraction", o->cg_fraction, "Retained fraction defining the certain group")
      ->capture_default_str()
      ->needs(cls);
  app->add_option("--iou", o->cfg.iou_threshold, "IoU threshold (detected iff IoU > t)")->capture_default_str();
  app->add_option("--min-voxels", o->cfg.min_lesion_voxels, "Minimum GT lesion size")->capture_default_str();
  app->add_option("--voxel-volume", o->cfg.voxel_volume_cm3, "Voxel volume in cm3")->capture_default_str();
  app->add_option("--min-score", o->cfg.min_score, "Drop predictions scoring below this")->capture_default_str();
  app->add_option("--boundaries", o->boundaries, "Fixed quartile boundaries in cm3 (3 values)")->expected(3);
  app->add_option("--out", o->out, "Output JSON")->required();
  app->add_option("--svg", o->svg, "Optional SVG plot");

  return {app, [o](RunContext& ctx) {
            detect::DetectEvalConfig cfg = o->cfg;
            if (!o->boundaries.empty()) cfg.quartile_boundaries = std::array<double, 3>{o->boundaries[0], o->boundaries[1], o->boundaries[2]};
            cfg.validate();
            ctx.inputs.emplace_back(o->det);
            const auto cases = io::read_detections(o->det);

            json doc = document("detection");
            doc["config"] = {{"iou_threshold", cfg.iou_threshold},
                             {"min_lesion_voxels", cfg.min_lesion_voxels},
                             {"voxel_volume_cm3", cfg.voxel_volume_cm3},
                             {"min_score", cfg.min_score},
                             {"fixed_boundaries", cfg.quartile_boundaries.has_value()}};
            doc["fp_definition"] =
                "a prediction is a false positive when its IoU with every retained ground-truth lesion is <= iou_threshold";

            json subsets = json::array();
            if (o->class_csv.empty()) {
              subsets.push_back(summary_json("all", detect::summarize(cases, cfg)));
            } else {
              ctx.inputs.emplace_back(o->class_csv);
              const auto records = io::read_predictions(o->class_csv);
              std::optional<json> uq_doc;
              if (!o->uq.empty()) {
                ctx.inputs.emplace_back(o->uq);
                uq_doc = read_document(o->uq, "uncertainty");
              }
              double threshold = 0.0;
              std::string source;
              if (o->threshold) {
                threshold = *o->threshold;
                source = "fixed";
              } else if (uq_doc) {
                threshold = uq_doc->at("threshold").get<double>();
                source = "uncertainty document";
              } else {
                threshold = metrics::youden_threshold(records).threshold;
                source = "youden";
              }
              std::set<std::string> cg;
              if (uq_doc) {
                cg = cg_from_document(*uq_doc, o->cg_fraction, o->uq);
              } else {
                const auto s = uq::stratify(uq::score_uncertainty(records), o->cg_fraction);
                cg.insert(s.certain.begin(), s.certain.end());
              }
              std::map<std::string, detect::PatientOutcome> outcomes;
              for (const auto& r : records) {
                const bool predicted = r.ensemble_prob() >= threshold;
                outcomes[r.patient_id] = {predicted == (r.label == 1), cg.count(r.patient_id) > 0};
              }
              for (const auto& s : detect::cross_task(cases, outcomes, cfg)) subsets.push_back(summary_json(s.name, s.summary));
              doc["classification"] = {{"threshold", threshold}, {"threshold_source", source}, {"cg_fraction", o->cg_fraction}};
            }
            doc["subsets"] = std::move(subsets);
            write_json(o->out, doc);
            ctx.outputs.emplace_back(o->out);
            if (!o->svg.empty()) {
              write_file(o->svg, plot_detection(doc));
              ctx.outputs.emplace_back(o->svg);
            }
            write_manifest(ctx, manifest_path_for(o->out));
          }};
}

}  // namespace lesionbench::cli
