#include "ervc/image.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "ervc/error.hpp"
#include "ervc/io.hpp"

namespace ervc {

Image16::Image16(std::size_t width, std::size_t height, std::uint16_t fill)
    : width_(width), height_(height), data_(width * height, fill) {
  if (width == 0 || height == 0) fail(Errc::BadInputShape, "image dimensions must be >= 1");
}

Image16::Image16(std::size_t width, std::size_t height, std::vector<std::uint16_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width == 0 || height == 0) fail(Errc::BadInputShape, "image dimensions must be >= 1");
  if (data_.size() != width * height)
    fail(Errc::BadInputShape, "pixel count does not match dimensions");
}

std::uint16_t Image16::max_value() const noexcept {
  return data_.empty() ? 0 : *std::max_element(data_.begin(), data_.end());
}

namespace {

Image16 mirror(const Image16& img) {
  Image16 out(img.width(), img.height());
  const std::size_t w = img.width();
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < w; ++x) out.at(w - 1 - x, y) = img.at(x, y);
  return out;
}

// One counterclockwise quarter turn: (x, y) -> (y, W-1-x).
Image16 rotate_ccw(const Image16& img) {
  const std::size_t w = img.width();
  Image16 out(img.height(), w);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < w; ++x) out.at(y, w - 1 - x) = img.at(x, y);
  return out;
}

}  // namespace

Image16 orient(const Image16& img, int quarter_turns, bool mirror_horizontal) {
  Image16 out = mirror_horizontal ? mirror(img) : img;
  const int turns = ((quarter_turns % 4) + 4) % 4;
  for (int i = 0; i < turns; ++i) out = rotate_ccw(out);
  return out;
}

Image16 center_on_square(const Image16& img) {
  const std::size_t side = std::max(img.width(), img.height());
  if (img.width() == img.height()) return img;
  Image16 out(side, side, 0);
  const std::size_t x_off = (side - img.width()) / 2;
  const std::size_t y_off = (side - img.height()) / 2;
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) out.at(x + x_off, y + y_off) = img.at(x, y);
  return out;
}

Image16 downsample_nn(const Image16& img, std::size_t target_side) {
  if (img.width() != img.height())
    fail(Errc::NotSquare, std::to_string(img.width()) + "x" + std::to_string(img.height()));
  if (target_side == 0) fail(Errc::BadInputShape, "target side must be >= 1");
  const std::size_t src = img.width();
  Image16 out(target_side, target_side);
  for (std::size_t y = 0; y < target_side; ++y) {
    const std::size_t sy = y * src / target_side;
    for (std::size_t x = 0; x < target_side; ++x) out.at(x, y) = img.at(x * src / target_side, sy);
  }
  return out;
}

DisplayWindow display_normalize(const Image16& img) { return {0, img.max_value()}; }

Image16 redact(const Image16& img, const RectRegion& region) {
  if (region.width == 0 || region.height == 0 || region.x0 + region.width > img.width() ||
      region.y0 + region.height > img.height())
    fail(Errc::RegionOutOfBounds, "redaction rectangle outside image");
  Image16 out = img;
  for (std::size_t y = region.y0; y < region.y0 + region.height; ++y)
    for (std::size_t x = region.x0; x < region.x0 + region.width; ++x) out.at(x, y) = 0;
  return out;
}

Image16 preprocess(const Image16& img, Orientation o, std::size_t target_side) {
  return downsample_nn(center_on_square(orient(img, o)), target_side);
}

std::vector<std::uint8_t> write_pgm16(const Image16& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.pixels().size() * 2);
  for (std::uint16_t v : img.pixels()) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return out;
}

namespace {

// Netpbm header tokenizer: whitespace separated, '#' comments to end of line.
class HeaderReader {
public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t next_number() {
    skip_space();
    const auto* begin = reinterpret_cast<const char*>(bytes_.data()) + pos_;
    const auto* end = reinterpret_cast<const char*>(bytes_.data()) + bytes_.size();
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr == begin) fail(Errc::BadHeader, "expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  std::string_view magic() {
    if (bytes_.size() < 2) fail(Errc::BadHeader, "file too short");
    pos_ = 2;
    return {reinterpret_cast<const char*>(bytes_.data()), 2};
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      fail(Errc::BadHeader, "missing separator before raster");
    return pos_ + 1;
  }

private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image16 read_pgm16(std::span<const std::uint8_t> bytes) {
  HeaderReader reader(bytes);
  if (reader.magic() != "P5") fail(Errc::BadHeader, "not a binary PGM (P5)");
  const std::size_t width = reader.next_number();
  const std::size_t height = reader.next_number();
  const std::size_t maxval = reader.next_number();
  if (width == 0 || height == 0) fail(Errc::BadHeader, "zero dimension");
  if (maxval != 65535) fail(Errc::BadHeader, "maxval must be 65535");
  const std::size_t offset = reader.raster_offset();
  const std::size_t needed = width * height * 2;
  if (bytes.size() - offset < needed) fail(Errc::TruncatedPixels, "raster shorter than header");
  std::vector<std::uint16_t> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<std::uint16_t>((bytes[offset + 2 * i] << 8) | bytes[offset + 2 * i + 1]);
  return Image16(width, height, std::move(data));
}

void save_pgm16(const std::filesystem::path& path, const Image16& img) {
  write_file(path, write_pgm16(img));
}

Image16 load_pgm16(const std::filesystem::path& path) { return read_pgm16(read_file(path)); }

}  // namespace ervc
