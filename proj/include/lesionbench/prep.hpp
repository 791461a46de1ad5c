#pragma once

#include <array>
#include <utility>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench::prep {

struct PrepConfig {
  Spacing target_spacing{1.0, 1.0, 2.5};
  Dims crop_dims{256, 256, 96};
  std::array<double, 2> window{-37.0, 171.0};
  std::array<double, 2> window_percentiles{0.5, 99.5};
  /// Fill for crop regions outside the source; defaults to window[0].
  std::optional<double> pad_fill;
  int threads = 1;

  double effective_pad_fill() const { return pad_fill.value_or(window[0]); }
  void validate() const;
};

enum class Interpolation { trilinear, nearest };

/// Output dims are round(n_in * s_in / s_out) (minimum 1). Output voxel j
/// samples input index (j + 0.5) * s_out / s_in - 0.5, clamped to the grid.
Volume resample(const Volume& v, const Spacing& target_spacing, Interpolation mode, int threads = 1);
Mask resample(const Mask& m, const Spacing& target_spacing, int threads = 1);

struct Window {
  double lo;
  double hi;
};

/// Percentiles (linear interpolation) of the pooled masked voxel values.
Window estimate_window(std::span<const Volume> volumes, std::span<const Mask> masks, double p_lo, double p_hi);

Volume apply_window(const Volume& v, double lo, double hi);

/// Fixed-size crop whose centre is aligned with the mask centroid. When the
/// alignment is ambiguous by half a voxel the window shifts to the high side,
/// so odd padding remainders land on the high side.
std::pair<Volume, Mask> crop_to_liver(const Volume& v, const Mask& m, const Dims& crop_dims, double pad_fill);

/// Min-max map onto [0,1]; constant scans map to zeros.
Volume normalize_per_scan(const Volume& v);

/// resample -> apply_window -> crop_to_liver -> normalize_per_scan.
std::pair<Volume, Mask> prep_pipeline(const Volume& v, const Mask& m, const PrepConfig& cfg);

}  // namespace lesionbench::prep
