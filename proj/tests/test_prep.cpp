#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "lesionbench/io.hpp"
#include "lesionbench/prep.hpp"
#include "test_util.hpp"

using namespace lesionbench;
using namespace lesionbench::prep;

namespace {

Volume field(Dims d, Spacing s, double (*f)(double, double, double)) {
  Volume v(d, s, 0.0f);
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) v.at(x, y, z) = static_cast<float>(f(x, y, z));
  return v;
}

Mask box_mask(Dims d, Spacing s, Dims lo, Dims hi) {
  std::vector<float> vox(d[0] * d[1] * d[2], 0.0f);
  for (std::size_t z = lo[2]; z < hi[2]; ++z)
    for (std::size_t y = lo[1]; y < hi[1]; ++y)
      for (std::size_t x = lo[0]; x < hi[0]; ++x) vox[x + d[0] * (y + d[1] * z)] = 1.0f;
  return Mask(d, s, std::move(vox));
}

Volume random_volume(Dims d, Spacing s, unsigned seed, float lo = -300.0f, float hi = 400.0f) {
  std::mt19937 g(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> vox(d[0] * d[1] * d[2]);
  for (auto& x : vox) x = u(g);
  return Volume(d, s, std::move(vox));
}

bool message_has(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("resample output dims follow the rounding rule") {
  const Volume v({4, 4, 4}, {2, 2, 5}, 1.0f);
  CHECK(resample(v, {1, 1, 2.5}, Interpolation::trilinear).dims() == Dims{8, 8, 8});
  CHECK(resample(v, {3, 3, 10}, Interpolation::trilinear).dims() == Dims{3, 3, 2});
  CHECK(resample(v, {100, 100, 100}, Interpolation::nearest).dims() == Dims{1, 1, 1});
  CHECK_THROWS_AS(resample(v, {0, 1, 1}, Interpolation::trilinear), ValidationError);
}

TEST_CASE("constant volumes stay constant") {
  const Volume v({5, 3, 4}, {0.8, 0.8, 3}, 42.0f);
  for (auto mode : {Interpolation::trilinear, Interpolation::nearest}) {
    const Volume r = resample(v, {1, 1, 2.5}, mode);
    for (float x : r.voxels()) CHECK(x == 42.0f);
  }
}

TEST_CASE("trilinear resampling reproduces an affine field") {
  auto f = [](double x, double y, double z) { return 2 * x + 3 * y - z; };
  const Dims d{6, 5, 4};
  const Volume v = field(d, {2, 2, 2}, f);
  const Volume r = resample(v, {1, 1, 1}, Interpolation::trilinear);
  REQUIRE(r.dims() == Dims{12, 10, 8});
  // Output centre j maps to input coordinate (j + 0.5) / 2 - 0.5, clamped to the grid.
  auto src = [](std::size_t j, std::size_t n) {
    return std::clamp((static_cast<double>(j) + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(n - 1));
  };
  double worst = 0.0;
  for (std::size_t z = 0; z < 8; ++z)
    for (std::size_t y = 0; y < 10; ++y)
      for (std::size_t x = 0; x < 12; ++x)
        worst = std::max(worst, std::abs(r.at(x, y, z) - f(src(x, d[0]), src(y, d[1]), src(z, d[2]))));
  CHECK(worst <= 1e-5);
}

TEST_CASE("same-spacing trilinear resampling is the identity") {
  const Volume v = random_volume({7, 6, 5}, {0.7, 0.7, 2.5}, 5);
  CHECK(resample(v, v.spacing(), Interpolation::trilinear) == v);
}

TEST_CASE("nearest resampling keeps masks binary") {
  std::mt19937 g(9);
  std::bernoulli_distribution b(0.3);
  std::vector<float> vox(9 * 7 * 5);
  for (auto& x : vox) x = b(g) ? 1.0f : 0.0f;
  const Mask m({9, 7, 5}, {0.77, 0.77, 3}, vox);
  for (Spacing s : {Spacing{1, 1, 2.5}, Spacing{0.5, 0.3, 1.1}, Spacing{2, 2, 7}}) {
    const Mask r = resample(m, s);
    for (float x : r.voxels()) CHECK((x == 0.0f || x == 1.0f));
  }
}

TEST_CASE("resampling is independent of the thread count") {
  const Volume v = random_volume({13, 11, 9}, {0.73, 0.73, 3.1}, 8);
  const Volume a = resample(v, {0.5, 0.5, 1.3}, Interpolation::trilinear, 1);
  const Volume b = resample(v, {0.5, 0.5, 1.3}, Interpolation::trilinear, 4);
  CHECK(a == b);
}

TEST_CASE("window estimation uses linear-interpolation percentiles") {
  std::vector<float> vox(101);
  for (int i = 0; i <= 100; ++i) vox[i] = static_cast<float>(i);
  std::vector<Volume> vols{Volume({101, 1, 1}, {1, 1, 1}, vox)};
  std::vector<Mask> masks{Mask({101, 1, 1}, {1, 1, 1}, std::vector<float>(101, 1.0f))};
  const Window w = estimate_window(vols, masks, 0.5, 99.5);
  CHECK(w.lo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.hi == doctest::Approx(99.5).epsilon(1e-12));

  std::vector<Volume> one{Volume({2, 1, 1}, {1, 1, 1}, std::vector<float>{42.0f, 7.0f})};
  std::vector<Mask> one_mask{Mask({2, 1, 1}, {1, 1, 1}, {1.0f, 0.0f})};
  const Window w1 = estimate_window(one, one_mask, 0.5, 99.5);
  CHECK(w1.lo == 42.0);
  CHECK(w1.hi == 42.0);

  std::vector<Mask> empty{Mask({2, 1, 1}, {1, 1, 1}, {0.0f, 0.0f})};
  CHECK(message_has([&] { estimate_window(one, empty, 0.5, 99.5); }, "empty"));
}

TEST_CASE("pooled window spans several scans") {
  std::vector<Volume> vols{Volume({2, 1, 1}, {1, 1, 1}, std::vector<float>{0, 10}),
                           Volume({3, 1, 1}, {1, 1, 1}, std::vector<float>{20, 30, 1000})};
  std::vector<Mask> masks{Mask({2, 1, 1}, {1, 1, 1}, {1, 1}), Mask({3, 1, 1}, {1, 1, 1}, {1, 1, 0})};
  const Window w = estimate_window(vols, masks, 0, 50);
  CHECK(w.lo == 0.0);
  CHECK(w.hi == doctest::Approx(15.0));
}

TEST_CASE("window clamps and is idempotent") {
  const Volume v({4, 1, 1}, {1, 1, 1}, std::vector<float>{-1000, 171, 500, 12});
  const Volume w = apply_window(v, -37, 171);
  CHECK(w.at(0, 0, 0) == -37.0f);
  CHECK(w.at(1, 0, 0) == 171.0f);
  CHECK(w.at(2, 0, 0) == 171.0f);
  CHECK(w.at(3, 0, 0) == 12.0f);
  CHECK(apply_window(w, -37, 171) == w);
  CHECK_THROWS_AS(apply_window(v, 5, 5), ValidationError);
}

TEST_CASE("centred crop is a windowed copy") {
  const Volume v = random_volume({10, 10, 10}, {1, 1, 1}, 3);
  const Mask m = box_mask({10, 10, 10}, {1, 1, 1}, {3, 3, 3}, {7, 7, 7});
  const auto [img, msk] = crop_to_liver(v, m, {6, 6, 6}, -37);
  REQUIRE(img.dims() == Dims{6, 6, 6});
  for (std::size_t z = 0; z < 6; ++z)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        CHECK(img.at(x, y, z) == v.at(x + 2, y + 2, z + 2));
        CHECK(msk.at(x, y, z) == m.at(x + 2, y + 2, z + 2));
      }
}

TEST_CASE("short source pads both sides with the extra voxel high") {
  const Volume v({1, 1, 4}, {1, 1, 1}, std::vector<float>{1, 2, 3, 4});
  const Mask m({1, 1, 4}, {1, 1, 1}, {1, 1, 1, 1});
  const auto [img, msk] = crop_to_liver(v, m, {1, 1, 7}, -37);
  const std::vector<float> want{-37, 1, 2, 3, 4, -37, -37};
  CHECK(std::vector<float>(img.voxels().begin(), img.voxels().end()) == want);
  const std::vector<float> want_mask{0, 1, 1, 1, 1, 0, 0};
  CHECK(std::vector<float>(msk.voxels().begin(), msk.voxels().end()) == want_mask);
}

TEST_CASE("crop rejects an empty mask") {
  const Volume v({3, 3, 3}, {1, 1, 1}, 0.0f);
  const Mask m({3, 3, 3}, {1, 1, 1}, std::vector<float>(27, 0.0f));
  CHECK(message_has([&] { crop_to_liver(v, m, {2, 2, 2}, 0); }, "empty mask"));
}

TEST_CASE("crop dims are exact and shift with the input") {
  std::mt19937 g(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Dims d{6 + g() % 6, 6 + g() % 6, 4 + g() % 5};
    const Dims c{1 + g() % 9, 1 + g() % 9, 1 + g() % 9};
    const Dims lo{g() % 3, g() % 3, g() % 2};
    const Dims hi{lo[0] + 1 + g() % 3, lo[1] + 1 + g() % 3, lo[2] + 1 + g() % 2};
    const Volume v = random_volume(d, {1, 1, 1}, g());
    const Mask m = box_mask(d, {1, 1, 1}, lo, hi);
    const auto [img, msk] = crop_to_liver(v, m, c, -37);
    CHECK(img.dims() == c);
    CHECK(msk.dims() == c);

    // Embed into a larger grid offset by (2,1,3): the crop content is unchanged.
    const Dims big{d[0] + 4, d[1] + 4, d[2] + 6};
    Volume vb(big, {1, 1, 1}, -37.0f);
    std::vector<float> mb(big[0] * big[1] * big[2], 0.0f);
    for (std::size_t z = 0; z < d[2]; ++z)
      for (std::size_t y = 0; y < d[1]; ++y)
        for (std::size_t x = 0; x < d[0]; ++x) {
          vb.at(x + 2, y + 1, z + 3) = v.at(x, y, z);
          mb[(x + 2) + big[0] * ((y + 1) + big[1] * (z + 3))] = m.at(x, y, z) ? 1.0f : 0.0f;
        }
    const auto [img2, msk2] = crop_to_liver(vb, Mask(big, {1, 1, 1}, mb), c, -37);
    CHECK(img2 == img);
    CHECK(msk2 == msk);
  }
}

TEST_CASE("per-scan normalisation") {
  const Volume v({3, 1, 1}, {1, 1, 1}, std::vector<float>{-37, 67, 171});
  const Volume n = normalize_per_scan(v);
  CHECK(n.at(0, 0, 0) == 0.0f);
  CHECK(n.at(1, 0, 0) == doctest::Approx(0.5));
  CHECK(n.at(2, 0, 0) == 1.0f);
  CHECK(n.unit() == IntensityUnit::normalized);

  const Volume c({2, 2, 2}, {1, 1, 1}, 9.0f);
  const Volume cn = normalize_per_scan(c);
  for (float x : cn.voxels()) CHECK(x == 0.0f);

  const Volume r = normalize_per_scan(random_volume({5, 5, 5}, {1, 1, 1}, 17));
  const auto [mn, mx] = std::minmax_element(r.voxels().begin(), r.voxels().end());
  CHECK(*mn == 0.0f);
  CHECK(*mx == 1.0f);
  CHECK(normalize_per_scan(r) == r);
}

TEST_CASE("pipeline produces the standard grid") {
  const Dims d{64, 64, 24};
  const Volume v = random_volume(d, {4, 4, 10}, 2, -1000, 1500);
  const Mask m = box_mask(d, {4, 4, 10}, {20, 18, 8}, {44, 40, 16});
  PrepConfig cfg;
  const auto [img, msk] = prep_pipeline(v, m, cfg);
  CHECK(img.dims() == Dims{256, 256, 96});
  CHECK(img.spacing() == Spacing{1, 1, 2.5});
  CHECK(msk.dims() == Dims{256, 256, 96});
  const auto [mn, mx] = std::minmax_element(img.voxels().begin(), img.voxels().end());
  CHECK(*mn >= 0.0f);
  CHECK(*mx <= 1.0f);
  CHECK(msk.count() > 0);
}

TEST_CASE("pipeline output files are byte-identical across runs and thread counts") {
  testutil::TempDir dir;
  const Dims d{30, 28, 12};
  const Volume v = random_volume(d, {1.6, 1.6, 5}, 4, -200, 300);
  const Mask m = box_mask(d, {1.6, 1.6, 5}, {8, 8, 3}, {22, 20, 9});
  PrepConfig cfg;
  cfg.crop_dims = {40, 40, 20};
  auto run = [&](int threads, const std::string& tag) {
    cfg.threads = threads;
    const auto [img, msk] = prep_pipeline(v, m, cfg);
    io::write_volume(dir / (tag + ".volhdr.json"), img);
    return io::read_text(dir / (tag + ".volraw"));
  };
  const std::string a = run(1, "a");
  CHECK(run(1, "b") == a);
  CHECK(run(4, "c") == a);
}

TEST_CASE("pipeline names the failing stage") {
  // A single masked voxel vanishes when the mask is downsampled by nearest lookup.
  const Dims d{8, 8, 8};
  const Volume v({8, 8, 8}, {1, 1, 1}, 0.0f);
  const Mask m = box_mask(d, {1, 1, 1}, {1, 1, 1}, {2, 2, 2});
  PrepConfig cfg;
  cfg.target_spacing = {4, 4, 4};
  cfg.crop_dims = {2, 2, 2};
  CHECK(message_has([&] { prep_pipeline(v, m, cfg); }, "prep stage resample"));

  cfg.window = {10, 5};
  CHECK(message_has([&] { prep_pipeline(v, m, cfg); }, "window"));
}
