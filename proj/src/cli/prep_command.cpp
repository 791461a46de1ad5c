#include "internal.hpp"
#include "lesionbench/io.hpp"
#include "lesionbench/prep.hpp"

namespace lesionbench::cli {

Command add_prep(CLI::App& parent) {
  struct Opts {
    std::string in;
    std::string mask;
    std::string out;
    std::vector<double> target_spacing{1.0, 1.0, 2.5};
    std::vector<std::size_t> crop_dims{256, 256, 96};
    std::vector<double> window{-37.0, 171.0};
    std::vector<double> window_percentiles{0.5, 99.5};
    std::optional<double> pad_fill;
    bool estimate_window = false;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* app = parent.add_subcommand("prep", "Resample, window, crop and normalize one scan");
  app->add_option("--in", o->in, "Input volume header (.volhdr.json)")->required()->check(CLI::ExistingFile);
  app->add_option("--mask", o->mask, "Liver mask header (.volhdr.json)")->required()->check(CLI::ExistingFile);
  app->add_option("--out", o->out, "Output directory")->required();
  app->add_option("--target-spacing", o->target_spacing, "Target spacing in mm (x y z)")->expected(3)->capture_default_str();
  app->add_option("--crop-dims", o->crop_dims, "Crop size in voxels (x y z)")->expected(3)->capture_default_str();
  app->add_option("--window", o->window, "Intensity window in HU (lo hi)")->expected(2)->capture_default_str();
  app->add_option("--window-percentiles", o->window_percentiles, "Percentiles used by --estimate-window")
      ->expected(2)
      ->capture_default_str();
  app->add_option("--pad-fill", o->pad_fill, "Fill value outside the scan (default: window lo)");
  app->add_flag("--estimate-window", o->estimate_window, "Derive the window from masked voxel percentiles");

  return {app, [o](RunContext& ctx) {
            prep::PrepConfig cfg;
            cfg.target_spacing = {o->target_spacing[0], o->target_spacing[1], o->target_spacing[2]};
            cfg.crop_dims = {o->crop_dims[0], o->crop_dims[1], o->crop_dims[2]};
            cfg.window_percentiles = {o->window_percentiles[0], o->window_percentiles[1]};
            cfg.window = {o->window[0], o->window[1]};
            cfg.pad_fill = o->pad_fill;
            cfg.threads = ctx.threads;

            ctx.inputs.emplace_back(o->in);
            ctx.inputs.emplace_back(o->mask);
            const Volume v = io::read_volume(o->in);
            const Mask m = io::read_mask(o->mask);
            std::string window_source = "fixed";
            if (o->estimate_window) {
              const Volume rv = prep::resample(v, cfg.target_spacing, prep::Interpolation::trilinear, cfg.threads);
              const Mask rm = prep::resample(m, cfg.target_spacing, cfg.threads);
              const auto w = prep::estimate_window(std::span(&rv, 1), std::span(&rm, 1), cfg.window_percentiles[0],
                                                   cfg.window_percentiles[1]);
              require(w.lo < w.hi, "prep: estimated window is empty (masked intensities are constant)");
              cfg.window = {w.lo, w.hi};
              window_source = "estimated";
            }
            cfg.validate();
            const auto [image, mask] = prep::prep_pipeline(v, m, cfg);

            const fs::path dir = o->out;
            fs::create_directories(dir);
            io::write_volume(dir / "image.volhdr.json", image);
            io::write_mask(dir / "mask.volhdr.json", mask);

            json doc = document("prep");
            doc["input"] = {{"dims", v.dims()}, {"spacing", v.spacing()}};
            doc["output"] = {{"dims", image.dims()}, {"spacing", image.spacing()}, {"unit", to_string(image.unit())}};
            doc["window"] = {{"lo", cfg.window[0]}, {"hi", cfg.window[1]}, {"source", window_source}};
            doc["pad_fill"] = cfg.effective_pad_fill();
            doc["mask_voxels"] = mask.count();
            write_json(dir / "prep.json", doc);
            for (const char* f : {"image.volhdr.json", "image.volraw", "mask.volhdr.json", "mask.volraw", "prep.json"})
              ctx.outputs.push_back(dir / f);
            write_manifest(ctx, dir / "manifest.json");
          }};
}

}  // namespace lesionbench::cli
