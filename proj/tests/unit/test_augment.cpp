#include "doctest.h"
#include "ervc/augment.hpp"
#include "ervc/error.hpp"
#include "ervc/rng.hpp"

#include <set>

using namespace ervc;

static Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

static Image16 random_image(std::size_t side, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image16 img(side, side);
  for (auto& v : img.pixels()) v = static_cast<std::uint16_t>(rng.below(4096));
  return img;
}

TEST_CASE("derive_seed") {
  CHECK(derive_seed(5, 3, 9) == derive_seed(5, 3, 9));
  CHECK(derive_seed(5, 0, 0) != derive_seed(5, 0, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t e = 0; e < 100; ++e)
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(1, e, i));
  CHECK(seen.size() == 10000);
}

TEST_CASE("degenerate config equals the normalized center crop") {
  AugmentConfig cfg;
  cfg.zoom_lo = cfg.zoom_hi = 1.0;
  cfg.random_crop = false;
  cfg.hist_mag = 0.0;
  cfg.out_side = 224;
  const Image16 img = random_image(250, 1);
  CHECK(augment_sample<float>(img, cfg, 77) == center_crop_normalized<float>(img, 224));
  const auto c = center_crop_normalized<double>(img, 224);
  const double peak = img.max_value();
  CHECK(c.shape() == Shape{1, 224, 224});
  CHECK(c[0] == img.at(13, 13) / peak);
  CHECK(c[224 * 224 - 1] == img.at(236, 236) / peak);
}

TEST_CASE("augment_sample shape, range and determinism") {
  AugmentConfig cfg;
  const Image16 img = random_image(250, 2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = augment_sample<float>(img, cfg, s);
    CHECK(a.shape() == Shape{1, 224, 224});
    for (float v : a.values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    CHECK(augment_sample<float>(img, cfg, s) == a);
  }
  CHECK(augment_sample<float>(img, cfg, 1) != augment_sample<float>(img, cfg, 2));
}

TEST_CASE("histogram shift is monotone") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const IntensityCurve curve = random_intensity_curve(3, 0.1, s);
    CHECK(curve.x.front() == 0.0);
    CHECK(curve.y.front() == 0.0);
    CHECK(curve.x.back() == 1.0);
    CHECK(curve.y.back() == 1.0);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = curve(i / 1000.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
  AugmentConfig cfg;
  cfg.zoom_lo = cfg.zoom_hi = 1.0;
  cfg.out_side = 32;
  Image16 ramp(32, 32);
  for (std::size_t i = 0; i < 32 * 32; ++i) ramp.pixels()[i] = static_cast<std::uint16_t>(i);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = augment_sample<double>(ramp, cfg, s);
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] >= a[i - 1]);
  }
}

TEST_CASE("input checks") {
  AugmentConfig cfg;
  CHECK(cfg.min_input_side() == 249);
  CHECK(code_of([&] { augment_sample<float>(random_image(240, 1), cfg, 0); }) == Errc::BadInputShape);
  CHECK(code_of([&] { augment_sample<float>(Image16(250, 251), cfg, 0); }) == Errc::BadInputShape);
  CHECK(code_of([] { center_crop_normalized<float>(Image16(10, 10), 11); }) == Errc::BadInputShape);
  AugmentConfig bad;
  bad.zoom_lo = 1.2;
  CHECK(code_of([&] { bad.validate(); }) == Errc::BadConfig);
  bad = {};
  bad.hist_mag = 0.6;
  CHECK(code_of([&] { bad.validate(); }) == Errc::BadConfig);
}
