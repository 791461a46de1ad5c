#include <array>

#include "internal.hpp"

namespace lesionbench::cli {

namespace {

struct SectionKind {
  const char* section;
  const char* kind;
};

// Fixed section order of the consolidated report.
constexpr std::array<SectionKind, 6> kSections{{{"classification", "classification"},
                                                {"uncertainty", "uncertainty"},
                                                {"calibration", "calibration"},
                                                {"dca", "dca"},
                                                {"detection", "detection"},
                                                {"harmonization", "combat-model"}}};

json section_body(const std::string& section, const json& doc) {
  json s = {{"name", section}};
  if (section == "classification") {
    s["threshold"] = doc.at("threshold");
    s["group_by"] = doc.at("group_by");
    json table = json::array();
    for (const auto& r : doc.at("rows")) {
      json row = {{"group", r.at("group")}, {"n", r.at("n")}};
      for (const auto& [k, v] : r.at("metrics").items()) row[k] = v;
      table.push_back(std::move(row));
    }
    s["table"] = std::move(table);
  } else if (section == "uncertainty") {
    s["threshold"] = doc.at("threshold");
    json curve = json::array();
    for (const auto& p : doc.at("points")) {
      curve.push_back({{"retained_fraction", p.at("retained_fraction")},
                       {"certain", {{"size", p.at("certain").at("size")},
                                    {"auc", p.at("certain").at("auc")},
                                    {"balanced_accuracy", p.at("certain").at("balanced_accuracy")}}},
                       {"uncertain", {{"size", p.at("uncertain").at("size")},
                                      {"auc", p.at("uncertain").at("auc")},
                                      {"balanced_accuracy", p.at("uncertain").at("balanced_accuracy")}}}});
    }
    s["curve"] = std::move(curve);
  } else if (section == "calibration") {
    for (const char* k : {"n", "brier", "slope", "intercept", "decomposition", "curve"}) s[k] = doc.at(k);
  } else if (section == "dca") {
    for (const char* k : {"n", "prevalence", "thresholds", "net_benefit"}) s[k] = doc.at(k);
  } else if (section == "detection") {
    for (const char* k : {"config", "fp_definition", "subsets"}) s[k] = doc.at(k);
    if (doc.contains("classification")) s["classification"] = doc.at("classification");
  } else {
    s["mode"] = doc.at("mode");
    s["features"] = doc.at("features").size();
    json batches = json::array();
    for (const auto& [name, b] : doc.at("batches").items())
      batches.push_back({{"batch", name}, {"iterations", b.value("iterations", 0)}});
    s["batches"] = std::move(batches);
  }
  return s;
}

std::string plot_for(const std::string& section, const json& doc) {
  if (section == "classification") return plot_classification(doc);
  if (section == "uncertainty") return plot_uncertainty(doc);
  if (section == "calibration") return plot_calibration(doc);
  if (section == "dca") return plot_dca(doc);
  if (section == "detection") return plot_detection(doc);
  return {};
}

}  // namespace

Command add_report(CLI::App& parent) {
  struct Opts {
    std::vector<std::string> inputs;
    std::string out;
    std::string svg_dir;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("report", "Consolidate module outputs into one report");
  app->add_option("--in", o->inputs, "Module output JSON (repeatable)")->required()->check(CLI::ExistingFile);
  app->add_option("--out", o->out, "Report JSON")->required();
  app->add_option("--svg-dir", o->svg_dir, "Directory for SVG plots");

  return {app, [o](RunContext& ctx) {
            std::map<std::string, std::pair<std::string, json>> by_kind;
            for (const auto& path : o->inputs) {
              ctx.inputs.emplace_back(path);
              json doc = read_document(path, "");
              const std::string kind = doc.value("kind", "");
              bool known = false;
              for (const auto& s : kSections) known = known || kind == s.kind;
              if (!known) fail(path + ": unsupported document kind \"" + kind + "\"");
              if (by_kind.count(kind))
                fail(path + ": a " + kind + " document was already given (" + by_kind[kind].first + ")");
              by_kind[kind] = {path, std::move(doc)};
            }

            json report = document("report");
            json sources = json::array();
            json sections = json::array();
            for (const auto& s : kSections) {
              const auto it = by_kind.find(s.kind);
              if (it == by_kind.end()) continue;
              sources.push_back({{"section", s.section}, {"path", it->second.first}});
              sections.push_back(section_body(s.section, it->second.second));
              if (!o->svg_dir.empty()) {
                const std::string plot = plot_for(s.section, it->second.second);
                if (plot.empty()) continue;
                const fs::path p = fs::path(o->svg_dir) / (std::string(s.section) + ".svg");
                write_file(p, plot);
                ctx.outputs.push_back(p);
              }
            }
            report["sources"] = std::move(sources);
            report["sections"] = std::move(sections);
            write_json(o->out, report);
            ctx.outputs.emplace_back(o->out);
            write_manifest(ctx, manifest_path_for(o->out));
          }};
}

}  // namespace lesionbench::cli
