#pragma once

// Class activation maps for networks ending in global average pooling
// followed by a single linear layer.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ervc/model.hpp"

namespace ervc {

struct CamMap {
  std::size_t class_index = 0;
  std::size_t height = 0, width = 0;  // last feature map resolution
  std::vector<double> grid;           // row-major, height x width
  double logit = 0.0;                 // model output for class_index
  double bias = 0.0;                  // head bias for class_index
  std::size_t out_side = 0;
  std::vector<double> overlay;        // bilinear upsample to out_side x out_side
};

/// `input` is one sample [C,H,W] or a batch of one. Throws IncompatibleHead or
/// BadTargetIndex. Never mutates the model.
template <typename T>
CamMap compute_cam(const Model<T>& model, const Tensor<T>& input, std::size_t class_c);

/// Align-corners=false bilinear resize of a row-major grid.
std::vector<double> bilinear_resize(const std::vector<double>& grid, std::size_t h, std::size_t w,
                                    std::size_t out_h, std::size_t out_w);

/// Two-anchor ramp: 0 -> purple (68, 1, 84), 1 -> yellow (253, 231, 37).
std::array<std::uint8_t, 3> ramp_color(double t);

struct Rgb8 {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> data;  // RGB interleaved
};

/// Min-max normalizes the overlay (constant maps become 0), colors it, and
/// blends at alpha 0.5 over the grayscale image (values in [0,1], row-major).
/// Throws ShapeMismatch.
Rgb8 render_overlay(const CamMap& cam, std::span<const double> gray, std::size_t side);

std::vector<std::uint8_t> write_ppm(const Rgb8& img);
std::string cam_grid_csv(const CamMap& cam);

}  // namespace ervc
