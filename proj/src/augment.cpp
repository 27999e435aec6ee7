#include "ervc/augment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "ervc/rng.hpp"

namespace ervc {

void AugmentConfig::validate() const {
  if (!(zoom_lo > 0.0) || !(zoom_lo <= zoom_hi) || !std::isfinite(zoom_hi))
    fail(Errc::BadConfig, "zoom range must satisfy 0 < lo <= hi");
  if (out_side == 0) fail(Errc::BadConfig, "output side must be >= 1");
  if (!(hist_mag >= 0.0 && hist_mag <= 0.5)) fail(Errc::BadConfig, "hist_mag must be in [0, 0.5]");
}

std::size_t AugmentConfig::min_input_side() const {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(out_side) / zoom_lo - 1e-9));
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t epoch, std::uint64_t index) {
  return splitmix64_mix((global_seed ^ std::rotl(epoch, 32) ^ std::rotl(index, 7)) +
                        SplitMix64::kGamma);
}

double IntensityCurve::operator()(double v) const {
  if (v <= x.front()) return y.front();
  if (v >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double t = (v - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + t * (y[i] - y[i - 1]);
}

IntensityCurve random_intensity_curve(std::size_t points, double magnitude, std::uint64_t seed) {
  SplitMix64 rng(seed);
  IntensityCurve c;
  c.x.push_back(0.0);
  c.y.push_back(0.0);
  std::vector<double> ys;
  for (std::size_t i = 1; i <= points; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(points + 1);
    c.x.push_back(xi);
    ys.push_back(std::clamp(xi + rng.uniform(-magnitude, magnitude), 0.0, 1.0));
  }
  std::sort(ys.begin(), ys.end());
  c.y.insert(c.y.end(), ys.begin(), ys.end());
  c.x.push_back(1.0);
  c.y.push_back(1.0);
  return c;
}

namespace {

void check_input(const Image16& img, std::size_t min_side) {
  if (img.width() != img.height() || img.width() < min_side)
    fail(Errc::BadInputShape, "need a square image of side >= " + std::to_string(min_side) +
                                  ", got " + std::to_string(img.width()) + "x" +
                                  std::to_string(img.height()));
}

}  // namespace

template <typename T>
Tensor<T> augment_sample(const Image16& img, const AugmentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_input(img, cfg.min_input_side());
  SplitMix64 rng(seed);
  const std::size_t side = img.width();
  const double f = cfg.zoom_lo == cfg.zoom_hi ? cfg.zoom_lo : rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
  const std::size_t zoomed =
      std::max(cfg.out_side, static_cast<std::size_t>(std::floor(static_cast<double>(side) * f)));
  const std::size_t slack = zoomed - cfg.out_side;
  std::size_t ox = slack / 2, oy = slack / 2;
  if (cfg.random_crop) {
    ox = static_cast<std::size_t>(rng.below(slack + 1));
    oy = static_cast<std::size_t>(rng.below(slack + 1));
  }
  const IntensityCurve curve =
      random_intensity_curve(cfg.hist_points, cfg.hist_mag, rng());
  const bool identity_curve = cfg.hist_mag == 0.0;

  const double peak = img.max_value();
  const std::size_t s = cfg.out_side;
  Tensor<T> out({1, s, s});
  std::vector<std::size_t> src(zoomed);
  for (std::size_t i = 0; i < zoomed; ++i) src[i] = std::min(side - 1, i * side / zoomed);
  for (std::size_t y = 0; y < s; ++y)
    for (std::size_t x = 0; x < s; ++x) {
      double v = peak > 0 ? img.at(src[ox + x], src[oy + y]) / peak : 0.0;
      if (!identity_curve) v = curve(v);
      out[y * s + x] = static_cast<T>(v);
    }
  return out;
}

template <typename T>
Tensor<T> center_crop_normalized(const Image16& img, std::size_t out_side) {
  if (out_side == 0) fail(Errc::BadConfig, "output side must be >= 1");
  check_input(img, out_side);
  const std::size_t o = (img.width() - out_side) / 2;
  const double peak = img.max_value();
  Tensor<T> out({1, out_side, out_side});
  for (std::size_t y = 0; y < out_side; ++y)
    for (std::size_t x = 0; x < out_side; ++x)
      out[y * out_side + x] = static_cast<T>(peak > 0 ? img.at(o + x, o + y) / peak : 0.0);
  return out;
}

template Tensor<float> augment_sample<float>(const Image16&, const AugmentConfig&, std::uint64_t);
template Tensor<double> augment_sample<double>(const Image16&, const AugmentConfig&, std::uint64_t);
template Tensor<float> center_crop_normalized<float>(const Image16&, std::size_t);
template Tensor<double> center_crop_normalized<double>(const Image16&, std::size_t);

}  // namespace ervc
