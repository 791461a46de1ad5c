#include "lesionbench/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lesionbench {

void fail(const std::string& message) { throw ValidationError(message); }

std::string to_string(IntensityUnit unit) {
  return unit == IntensityUnit::HU ? "HU" : "normalized";
}

IntensityUnit parse_unit(const std::string& text) {
  if (text == "HU") return IntensityUnit::HU;
  if (text == "normalized") return IntensityUnit::normalized;
  fail("unit: expected \"HU\" or \"normalized\", got \"" + text + "\"");
}

Volume::Volume(Dims dims, Spacing spacing, std::vector<float> voxels, IntensityUnit unit)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)), unit_(unit) {
  validate();
}

Volume::Volume(Dims dims, Spacing spacing, float fill, IntensityUnit unit)
    : dims_(dims), spacing_(spacing), voxels_(dims[0] * dims[1] * dims[2], fill), unit_(unit) {
  validate();
}

void Volume::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(dims_[a] > 0, "dims: every component must be positive");
    require(std::isfinite(spacing_[a]) && spacing_[a] > 0.0,
            "spacing: every component must be finite and > 0");
  }
  require(voxels_.size() == dims_[0] * dims_[1] * dims_[2],
          "payload length mismatch: expected " + std::to_string(dims_[0] * dims_[1] * dims_[2]) +
              " voxels, got " + std::to_string(voxels_.size()));
  for (std::size_t i = 0; i < voxels_.size(); ++i) {
    if (std::isnan(voxels_[i])) fail("voxel " + std::to_string(i) + " is NaN");
  }
}

bool Volume::same_grid(const Volume& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_;
}

Mask::Mask(Volume grid) : grid_(std::move(grid)) {
  const auto v = grid_.voxels();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0f && v[i] != 1.0f)
      fail("mask voxel " + std::to_string(i) + " is not binary (value " + std::to_string(v[i]) + ")");
  }
  if (grid_.unit() != IntensityUnit::normalized)
    grid_ = Volume(grid_.dims(), grid_.spacing(), std::vector<float>(v.begin(), v.end()),
                   IntensityUnit::normalized);
}

Mask::Mask(Dims dims, Spacing spacing, std::vector<float> voxels)
    : Mask(Volume(dims, spacing, std::move(voxels), IntensityUnit::normalized)) {}

std::size_t Mask::count() const {
  const auto v = voxels();
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), 1.0f));
}

Box3D Box3D::from_corners(std::span<const double> corners) {
  require(corners.size() == 6, "box: expected 6 coordinates [x0,y0,z0,x1,y1,z1]");
  Box3D b;
  for (int a = 0; a < 3; ++a) {
    b.min[a] = corners[a];
    b.max[a] = corners[a + 3];
  }
  return b;
}

bool Box3D::valid() const {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(min[a]) || !std::isfinite(max[a]) || !(max[a] > min[a])) return false;
  }
  return true;
}

double PredictionRecord::ensemble_prob() const {
  if (fold_probs.empty()) return 0.0;
  return std::accumulate(fold_probs.begin(), fold_probs.end(), 0.0) /
         static_cast<double>(fold_probs.size());
}

}  // namespace lesionbench
