#include "ervc/cam.hpp"

#include <algorithm>
#include <cmath>

#include "ervc/io.hpp"

namespace ervc {

template <typename T>
CamMap compute_cam(const Model<T>& model, const Tensor<T>& input, std::size_t class_c) {
  const auto& nodes = model.nodes();
  if (nodes.size() < 2 || nodes.back().spec.kind != LayerKind::Linear)
    fail(Errc::IncompatibleHead, "model does not end in a linear layer");
  const std::size_t head = nodes.size() - 1;
  const int gap = nodes[head].inputs.front();
  if (gap < 0 || nodes[static_cast<std::size_t>(gap)].spec.kind != LayerKind::GlobalAvgPool)
    fail(Errc::IncompatibleHead, "linear head is not fed by global average pooling");
  const int feat = nodes[static_cast<std::size_t>(gap)].inputs.front();

  Tensor<T> x = input;
  if (x.rank() == model.sample_shape().size()) {
    Shape s{1};
    s.insert(s.end(), x.shape().begin(), x.shape().end());
    x.reshape(s);
  }
  if (x.dim(0) != 1) fail(Errc::BadInputShape, "CAM takes a single sample");

  Tape<T> tape;
  const Tensor<T> logits = model.infer(x, &tape);
  const std::size_t classes = logits.dim(1);
  if (class_c >= classes) fail(Errc::BadTargetIndex, "class index beyond the head");
  const Tensor<T>& f = feat < 0 ? x : tape.outputs[static_cast<std::size_t>(feat)];
  const std::size_t k = f.dim(1), h = f.dim(2), w = f.dim(3);
  const auto& p = model.params(head);

  CamMap cam;
  cam.class_index = class_c;
  cam.height = h;
  cam.width = w;
  cam.grid.assign(h * w, 0.0);
  for (std::size_t ch = 0; ch < k; ++ch) {
    const double wk = p.weight[class_c * k + ch];
    for (std::size_t i = 0; i < h * w; ++i) cam.grid[i] += wk * static_cast<double>(f[ch * h * w + i]);
  }
  cam.logit = logits[class_c];
  cam.bias = p.bias[class_c];
  cam.out_side = model.sample_shape().back();
  cam.overlay = bilinear_resize(cam.grid, h, w, cam.out_side, cam.out_side);
  return cam;
}

template CamMap compute_cam<float>(const Model<float>&, const Tensor<float>&, std::size_t);
template CamMap compute_cam<double>(const Model<double>&, const Tensor<double>&, std::size_t);

std::vector<double> bilinear_resize(const std::vector<double>& grid, std::size_t h, std::size_t w,
                                    std::size_t out_h, std::size_t out_w) {
  if (grid.size() != h * w || h == 0 || w == 0) fail(Errc::ShapeMismatch, "grid size");
  auto coord = [](std::size_t o, std::size_t in, std::size_t out, std::size_t& i0, double& t) {
    double s = (static_cast<double>(o) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    i0 = std::min(static_cast<std::size_t>(s), in - 1);
    t = s - static_cast<double>(i0);
  };
  std::vector<double> out(out_h * out_w);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    std::size_t y0;
    double ty;
    coord(oy, h, out_h, y0, ty);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      std::size_t x0;
      double tx;
      coord(ox, w, out_w, x0, tx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double top = grid[y0 * w + x0] * (1 - tx) + grid[y0 * w + x1] * tx;
      const double bot = grid[y1 * w + x0] * (1 - tx) + grid[y1 * w + x1] * tx;
      out[oy * out_w + ox] = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

std::array<std::uint8_t, 3> ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  constexpr double lo[3] = {68, 1, 84}, hi[3] = {253, 231, 37};
  std::array<std::uint8_t, 3> c{};
  for (int i = 0; i < 3; ++i) c[i] = static_cast<std::uint8_t>(std::lround(lo[i] + t * (hi[i] - lo[i])));
  return c;
}

Rgb8 render_overlay(const CamMap& cam, std::span<const double> gray, std::size_t side) {
  if (cam.out_side != side || cam.overlay.size() != side * side || gray.size() != side * side)
    fail(Errc::ShapeMismatch, "overlay and image sizes differ");
  const auto [mn, mx] = std::minmax_element(cam.overlay.begin(), cam.overlay.end());
  const double lo = *mn, range = *mx - *mn;
  Rgb8 img{side, side, std::vector<std::uint8_t>(side * side * 3)};
  for (std::size_t i = 0; i < side * side; ++i) {
    const double t = range > 0 ? (cam.overlay[i] - lo) / range : 0.0;
    const auto c = ramp_color(t);
    const double g = 255.0 * std::clamp(gray[i], 0.0, 1.0);
    for (int ch = 0; ch < 3; ++ch)
      img.data[i * 3 + ch] = static_cast<std::uint8_t>(std::lround(0.5 * g + 0.5 * c[ch]));
  }
  return img;
}

std::vector<std::uint8_t> write_ppm(const Rgb8& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

std::string cam_grid_csv(const CamMap& cam) {
  std::string out;
  for (std::size_t y = 0; y < cam.height; ++y) {
    for (std::size_t x = 0; x < cam.width; ++x) {
      if (x) out += ',';
      out += format_real(cam.grid[y * cam.width + x]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ervc
