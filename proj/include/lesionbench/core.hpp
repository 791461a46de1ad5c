#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lesionbench {

/// Raised for any input that violates a documented contract: malformed files,
/// out-of-range values, failed preconditions. The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& message);
inline void require(bool ok, const std::string& message) {
  if (!ok) fail(message);
}

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;

enum class IntensityUnit { HU, normalized };

std::string to_string(IntensityUnit unit);
IntensityUnit parse_unit(const std::string& text);

/// Dense scalar grid, x-fastest. Voxel centres sit at integer indices; the
/// physical position of index i along an axis is i * spacing.
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, Spacing spacing, std::vector<float> voxels,
         IntensityUnit unit = IntensityUnit::HU);
  /// Constant-filled grid.
  Volume(Dims dims, Spacing spacing, float fill, IntensityUnit unit = IntensityUnit::HU);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  IntensityUnit unit() const { return unit_; }
  std::size_t size() const { return voxels_.size(); }

  std::span<const float> voxels() const { return voxels_; }
  std::span<float> voxels() { return voxels_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_[0] * (y + dims_[1] * z);
  }
  float at(std::size_t x, std::size_t y, std::size_t z) const { return voxels_[index(x, y, z)]; }
  float& at(std::size_t x, std::size_t y, std::size_t z) { return voxels_[index(x, y, z)]; }

  bool same_grid(const Volume& other) const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_{0, 0, 0};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<float> voxels_;
  IntensityUnit unit_ = IntensityUnit::HU;

  void validate() const;
};

/// Binary-valued grid paired with a Volume.
class Mask {
 public:
  Mask() = default;
  explicit Mask(Volume grid);
  Mask(Dims dims, Spacing spacing, std::vector<float> voxels);

  const Volume& grid() const { return grid_; }
  const Dims& dims() const { return grid_.dims(); }
  const Spacing& spacing() const { return grid_.spacing(); }
  std::span<const float> voxels() const { return grid_.voxels(); }
  bool at(std::size_t x, std::size_t y, std::size_t z) const { return grid_.at(x, y, z) != 0.0f; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Volume grid_;
};

/// Axis-aligned box in voxel coordinates, covering [min, max) on each axis.
struct Box3D {
  std::array<double, 3> min{};
  std::array<double, 3> max{};

  static Box3D from_corners(std::span<const double> corners);
  double extent(int axis) const { return max[axis] - min[axis]; }
  double volume() const { return extent(0) * extent(1) * extent(2); }
  bool valid() const;

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct PredictionRecord {
  std::string patient_id;
  std::string site;
  std::string phase;
  int label = 0;  ///< 1 = positive (CRLM), 0 = other
  std::vector<double> fold_probs;
  std::optional<std::string> subgroup;

  /// Mean of the per-fold probabilities.
  double ensemble_prob() const;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct ScoredBox {
  Box3D box;
  double score = 0.0;
  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct GroundTruthLesion {
  Box3D box;
  std::int64_t voxel_count = 1;
  friend bool operator==(const GroundTruthLesion&, const GroundTruthLesion&) = default;
};

struct DetectionCase {
  std::string image_id;
  std::vector<ScoredBox> predictions;
  std::vector<GroundTruthLesion> ground_truth;
  friend bool operator==(const DetectionCase&, const DetectionCase&) = default;
};

/// Point estimate with a percentile bootstrap interval. n_resamples counts
/// the resamples that contributed; n_skipped those where the statistic was
/// undefined.
struct MetricResult {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_resamples = 0;
  int n_skipped = 0;
};

/// A metric that may be undefined (empty denominator, single class, ...).
using MaybeMetric = std::optional<MetricResult>;

}  // namespace lesionbench
