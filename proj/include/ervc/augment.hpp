#pragma once

// Training-time stochastic transforms: nearest-neighbour zoom, random crop,
// monotone piecewise-linear histogram shift. Pure given (image, config, seed).

#include <cstdint>

#include "ervc/image.hpp"
#include "ervc/tensor.hpp"

namespace ervc {

struct AugmentConfig {
  double zoom_lo = 0.9;
  double zoom_hi = 1.1;
  std::size_t out_side = 224;
  std::size_t hist_points = 3;
  double hist_mag = 0.1;  // max control point displacement, in normalized intensity
  bool random_crop = true;  // false: central crop (debugging / degenerate checks)

  /// Throws BadConfig.
  void validate() const;
  /// Smallest square input side accepted: ceil(out_side / zoom_lo).
  std::size_t min_input_side() const;
};

/// splitmix64_mix(global ^ rotl(epoch, 32) ^ rotl(index, 7) + 0x9E3779B97F4A7C15).
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t epoch, std::uint64_t index);

/// Returns a [1, out_side, out_side] tensor with values in [0, 1].
/// Throws BadInputShape unless the image is square with side >= min_input_side().
template <typename T>
Tensor<T> augment_sample(const Image16& img, const AugmentConfig& cfg, std::uint64_t seed);

/// Deterministic evaluation view: central out_side crop, divided by the image max.
/// Throws BadInputShape.
template <typename T>
Tensor<T> center_crop_normalized(const Image16& img, std::size_t out_side);

/// Control points (x_i, y_i) of the intensity remap, including (0,0) and (1,1).
struct IntensityCurve {
  std::vector<double> x;
  std::vector<double> y;
  double operator()(double v) const;
};

IntensityCurve random_intensity_curve(std::size_t points, double magnitude, std::uint64_t seed);

}  // namespace ervc
