#pragma once

// 16-bit single-channel rasters and the deterministic preprocessing chain:
// orient -> center_on_square -> downsample_nn. Also 16-bit PGM interchange.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ervc {

class Image16 {
public:
  Image16() = default;
  Image16(std::size_t width, std::size_t height, std::uint16_t fill = 0);
  Image16(std::size_t width, std::size_t height, std::vector<std::uint16_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint16_t at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  std::uint16_t& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  std::span<const std::uint16_t> pixels() const noexcept { return data_; }
  std::span<std::uint16_t> pixels() noexcept { return data_; }

  std::uint16_t max_value() const noexcept;

  bool operator==(const Image16&) const = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint16_t> data_;
};

struct RectRegion {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t width = 0;
  std::size_t height = 0;
};

struct Orientation {
  int quarter_turns = 0;
  bool mirror = false;
};

/// Left-right mirror (if requested) followed by `quarter_turns` counterclockwise
/// 90 degree rotations. quarter_turns is taken mod 4.
Image16 orient(const Image16& img, int quarter_turns, bool mirror_horizontal);
inline Image16 orient(const Image16& img, Orientation o) {
  return orient(img, o.quarter_turns, o.mirror);
}

/// Pads the short axis with zeros to a max(w,h) square. Padding is split
/// floor(d/2) before and ceil(d/2) after.
Image16 center_on_square(const Image16& img);

/// out[y][x] = in[floor(y*S/T)][floor(x*S/T)]. Throws NotSquare.
Image16 downsample_nn(const Image16& img, std::size_t target_side);

struct DisplayWindow {
  std::uint16_t black_point = 0;
  std::uint16_t white_point = 0;
};

/// Look-up parameters only: 0 is black, the image maximum is white.
DisplayWindow display_normalize(const Image16& img);

/// Zeroes `region`. Throws RegionOutOfBounds.
Image16 redact(const Image16& img, const RectRegion& region);

/// orient + center_on_square + downsample_nn.
Image16 preprocess(const Image16& img, Orientation o, std::size_t target_side = 250);

// Netpbm P5, maxval 65535, big-endian samples.
std::vector<std::uint8_t> write_pgm16(const Image16& img);
Image16 read_pgm16(std::span<const std::uint8_t> bytes);

void save_pgm16(const std::filesystem::path& path, const Image16& img);
Image16 load_pgm16(const std::filesystem::path& path);

}  // namespace ervc
