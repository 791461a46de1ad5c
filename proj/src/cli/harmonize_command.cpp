#include "internal.hpp"
#include "lesionbench/harmonize.hpp"
#include "lesionbench/io.hpp"

namespace lesionbench::cli {

Command add_harmonize(CLI::App& parent) {
  struct Opts {
    std::string features;
    std::string fit;
    std::string apply;
    std::string mode = "empirical_bayes";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("harmonize", "ComBat site harmonization (fit on train, apply to new data)");
  app->add_option("--features", o->features, "Feature CSV with a batch column")->required()->check(CLI::ExistingFile);
  auto* fit = app->add_option("--fit", o->fit, "Fit on --features and write the model JSON here");
  auto* apply = app->add_option("--apply", o->apply, "Model JSON to apply to --features")->check(CLI::ExistingFile);
  fit->excludes(apply);
  app->add_option("--mode", o->mode, "exact or empirical_bayes (alias eb)")
      ->capture_default_str()
      ->check(CLI::IsMember({"exact", "empirical_bayes", "eb"}));
  app->add_option("--out", o->out, "Harmonized feature CSV");

  return {app, [o](RunContext& ctx) {
            require(!o->fit.empty() || !o->apply.empty(), "harmonize: one of --fit or --apply is required");
            require(!o->apply.empty() ? !o->out.empty() : true, "harmonize: --apply requires --out");
            ctx.inputs.emplace_back(o->features);
            const auto x = harmonize::read_features(o->features);
            harmonize::CombatModel model;
            fs::path primary;
            if (!o->fit.empty()) {
              model = harmonize::combat_fit(x, harmonize::parse_mode(o->mode));
              write_file(o->fit, harmonize::model_to_json(model));
              ctx.outputs.emplace_back(o->fit);
              primary = o->fit;
            } else {
              ctx.inputs.emplace_back(o->apply);
              model = harmonize::model_from_json(io::read_text(o->apply), o->apply);
            }
            if (!o->out.empty()) {
              write_file(o->out, harmonize::format_features(harmonize::combat_transform(model, x)));
              ctx.outputs.emplace_back(o->out);
              if (primary.empty()) primary = o->out;
            }
            write_manifest(ctx, manifest_path_for(primary));
          }};
}

}  // namespace lesionbench::cli
