#include "lesionbench/prep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lesionbench/numeric.hpp"

namespace lesionbench::prep {

void PrepConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(std::isfinite(target_spacing[a]) && target_spacing[a] > 0.0, "target_spacing: components must be > 0");
    require(crop_dims[a] > 0, "crop_dims: components must be positive");
  }
  require(window[0] < window[1], "window: lo must be < hi");
  require(window_percentiles[0] > 0.0 && window_percentiles[0] < window_percentiles[1] &&
              window_percentiles[1] < 100.0,
          "window_percentiles: need 0 < lo < hi < 100");
  if (pad_fill) require(std::isfinite(*pad_fill), "pad_fill: must be finite");
}

namespace {

struct AxisMap {
  std::size_t out_n;
  double ratio;  // s_out / s_in
  std::size_t in_n;

  double source(std::size_t j) const {
    const double x = (static_cast<double>(j) + 0.5) * ratio - 0.5;
    return std::clamp(x, 0.0, static_cast<double>(in_n - 1));
  }
};

AxisMap axis_map(std::size_t n_in, double s_in, double s_out) {
  const double extent = static_cast<double>(n_in) * s_in / s_out;
  const auto n_out = std::max<long long>(1, std::llround(extent));
  return {static_cast<std::size_t>(n_out), s_out / s_in, n_in};
}

struct Tap {
  std::size_t i0, i1;
  double w1;
};

Tap linear_tap(double x, std::size_t n) {
  const auto i0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t i1 = std::min(i0 + 1, n - 1);
  return {i0, i1, x - static_cast<double>(i0)};
}

std::size_t nearest_index(double x, std::size_t n) {
  return std::min(static_cast<std::size_t>(std::floor(x + 0.5)), n - 1);
}

}  // namespace

Volume resample(const Volume& v, const Spacing& target_spacing, Interpolation mode, int threads) {
  for (int a = 0; a < 3; ++a)
    require(std::isfinite(target_spacing[a]) && target_spacing[a] > 0.0, "resample: target spacing must be > 0");
  const auto& d = v.dims();
  const auto& s = v.spacing();
  const std::array<AxisMap, 3> maps{axis_map(d[0], s[0], target_spacing[0]), axis_map(d[1], s[1], target_spacing[1]),
                                    axis_map(d[2], s[2], target_spacing[2])};
  const Dims out_dims{maps[0].out_n, maps[1].out_n, maps[2].out_n};
  std::vector<float> out(out_dims[0] * out_dims[1] * out_dims[2]);
  const auto in = v.voxels();

  std::vector<Tap> tx(out_dims[0]), ty(out_dims[1]);
  for (std::size_t i = 0; i < out_dims[0]; ++i) tx[i] = linear_tap(maps[0].source(i), d[0]);
  for (std::size_t j = 0; j < out_dims[1]; ++j) ty[j] = linear_tap(maps[1].source(j), d[1]);

  parallel_for(out_dims[2], threads, [&](std::size_t k) {
    const double zs = maps[2].source(k);
    float* slice = out.data() + k * out_dims[0] * out_dims[1];
    if (mode == Interpolation::nearest) {
      const std::size_t zk = nearest_index(zs, d[2]);
      for (std::size_t j = 0; j < out_dims[1]; ++j) {
        const std::size_t yj = nearest_index(maps[1].source(j), d[1]);
        for (std::size_t i = 0; i < out_dims[0]; ++i) {
          slice[i + out_dims[0] * j] = in[v.index(nearest_index(maps[0].source(i), d[0]), yj, zk)];
        }
      }
      return;
    }
    const Tap tz = linear_tap(zs, d[2]);
    for (std::size_t j = 0; j < out_dims[1]; ++j) {
      const Tap& y = ty[j];
      for (std::size_t i = 0; i < out_dims[0]; ++i) {
        const Tap& x = tx[i];
        auto lerp_x = [&](std::size_t yy, std::size_t zz) {
          const double a = in[v.index(x.i0, yy, zz)];
          const double b = in[v.index(x.i1, yy, zz)];
          return a + x.w1 * (b - a);
        };
        auto lerp_xy = [&](std::size_t zz) {
          const double a = lerp_x(y.i0, zz);
          const double b = lerp_x(y.i1, zz);
          return a + y.w1 * (b - a);
        };
        const double a = lerp_xy(tz.i0);
        const double b = lerp_xy(tz.i1);
        slice[i + out_dims[0] * j] = static_cast<float>(a + tz.w1 * (b - a));
      }
    }
  });
  return Volume(out_dims, target_spacing, std::move(out), v.unit());
}

Mask resample(const Mask& m, const Spacing& target_spacing, int threads) {
  return Mask(resample(m.grid(), target_spacing, Interpolation::nearest, threads));
}

Window estimate_window(std::span<const Volume> volumes, std::span<const Mask> masks, double p_lo, double p_hi) {
  require(volumes.size() == masks.size(), "estimate_window: volumes and masks must be paired");
  require(p_lo >= 0.0 && p_lo <= p_hi && p_hi <= 100.0, "estimate_window: need 0 <= p_lo <= p_hi <= 100");
  std::vector<double> pooled;
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    require(volumes[i].same_grid(masks[i].grid()),
            "estimate_window: grid mismatch between volume and mask " + std::to_string(i));
    const auto v = volumes[i].voxels();
    const auto m = masks[i].voxels();
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (m[j] != 0.0f) pooled.push_back(v[j]);
    }
  }
  require(!pooled.empty(), "estimate_window: pooled set is empty (all masks empty)");
  std::sort(pooled.begin(), pooled.end());
  return {percentile_sorted(pooled, p_lo), percentile_sorted(pooled, p_hi)};
}

Volume apply_window(const Volume& v, double lo, double hi) {
  require(lo < hi, "apply_window: lo must be < hi");
  std::vector<float> out(v.voxels().begin(), v.voxels().end());
  const auto flo = static_cast<float>(lo);
  const auto fhi = static_cast<float>(hi);
  for (float& x : out) x = std::clamp(x, flo, fhi);
  return Volume(v.dims(), v.spacing(), std::move(out), v.unit());
}

std::pair<Volume, Mask> crop_to_liver(const Volume& v, const Mask& m, const Dims& crop_dims, double pad_fill) {
  require(v.same_grid(m.grid()), "crop_to_liver: volume and mask grids differ");
  for (int a = 0; a < 3; ++a) require(crop_dims[a] > 0, "crop_to_liver: crop_dims must be positive");
  const auto& d = v.dims();

  std::array<double, 3> sum{0.0, 0.0, 0.0};
  std::size_t count = 0;
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        sum[0] += static_cast<double>(x);
        sum[1] += static_cast<double>(y);
        sum[2] += static_cast<double>(z);
        ++count;
      }
  require(count > 0, "crop_to_liver: empty mask");

  // Window start s puts the window centre s + (c-1)/2 at the centroid;
  // indices are integer so the centroid sums are exact.
  std::array<long long, 3> start{};
  for (int a = 0; a < 3; ++a) {
    const double centroid = sum[a] / static_cast<double>(count);
    const double ideal = centroid - (static_cast<double>(crop_dims[a]) - 1.0) / 2.0;
    start[a] = static_cast<long long>(std::floor(ideal + 0.5));
  }

  const auto fill = static_cast<float>(pad_fill);
  std::vector<float> img(crop_dims[0] * crop_dims[1] * crop_dims[2], fill);
  std::vector<float> msk(img.size(), 0.0f);
  auto inside = [&](long long c, int a) { return c >= 0 && c < static_cast<long long>(d[a]); };
  for (std::size_t z = 0; z < crop_dims[2]; ++z) {
    const long long sz = start[2] + static_cast<long long>(z);
    if (!inside(sz, 2)) continue;
    for (std::size_t y = 0; y < crop_dims[1]; ++y) {
      const long long sy = start[1] + static_cast<long long>(y);
      if (!inside(sy, 1)) continue;
      for (std::size_t x = 0; x < crop_dims[0]; ++x) {
        const long long sx = start[0] + static_cast<long long>(x);
        if (!inside(sx, 0)) continue;
        const std::size_t src = v.index(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy),
                                        static_cast<std::size_t>(sz));
        const std::size_t dst = x + crop_dims[0] * (y + crop_dims[1] * z);
        img[dst] = v.voxels()[src];
        msk[dst] = m.voxels()[src];
      }
    }
  }
  return {Volume(crop_dims, v.spacing(), std::move(img), v.unit()), Mask(crop_dims, v.spacing(), std::move(msk))};
}

Volume normalize_per_scan(const Volume& v) {
  const auto in = v.voxels();
  const auto [mn, mx] = std::minmax_element(in.begin(), in.end());
  const double lo = *mn;
  const double range = static_cast<double>(*mx) - lo;
  std::vector<float> out(in.size(), 0.0f);
  if (range > 0.0) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<float>((in[i] - lo) / range);
  }
  return Volume(v.dims(), v.spacing(), std::move(out), IntensityUnit::normalized);
}

std::pair<Volume, Mask> prep_pipeline(const Volume& v, const Mask& m, const PrepConfig& cfg) {
  cfg.validate();
  require(v.same_grid(m.grid()), "prep: input volume and mask grids differ");
  Volume img = resample(v, cfg.target_spacing, Interpolation::trilinear, cfg.threads);
  Mask mask = resample(m, cfg.target_spacing, cfg.threads);
  require(mask.count() > 0, "prep stage resample: mask empty after resampling");
  img = apply_window(img, cfg.window[0], cfg.window[1]);
  auto [cropped, cropped_mask] = [&] {
    try {
      return crop_to_liver(img, mask, cfg.crop_dims, cfg.effective_pad_fill());
    } catch (const ValidationError& e) {
      fail(std::string("prep stage crop: ") + e.what());
    }
  }();
  return {normalize_per_scan(cropped), std::move(cropped_mask)};
}

}  // namespace lesionbench::prep
