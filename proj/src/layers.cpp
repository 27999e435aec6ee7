#include "ervc/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ervc/rng.hpp"

namespace ervc {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "CONV2D";
    case LayerKind::Relu: return "RELU";
    case LayerKind::MaxPool2d: return "MAXPOOL2D";
    case LayerKind::GlobalAvgPool: return "GLOBALAVGPOOL";
    case LayerKind::Linear: return "LINEAR";
    case LayerKind::BatchNorm2d: return "BATCHNORM2D";
    case LayerKind::Add: return "ADD";
    case LayerKind::Flatten: return "FLATTEN";
  }
  return "?";
}

LayerSpec LayerSpec::conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                            std::size_t padding, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool2d(std::size_t kernel, std::size_t stride, std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2d;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::global_avg_pool() {
  LayerSpec s;
  s.kind = LayerKind::GlobalAvgPool;
  return s;
}

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::Linear;
  s.in_features = in;
  s.out_features = out;
  s.bias = true;
  return s;
}

LayerSpec LayerSpec::batchnorm2d(std::size_t channels) {
  LayerSpec s;
  s.kind = LayerKind::BatchNorm2d;
  s.in_channels = channels;
  return s;
}

LayerSpec LayerSpec::add() {
  LayerSpec s;
  s.kind = LayerKind::Add;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

void LayerSpec::validate() const {
  auto require = [this](bool ok, const char* what) {
    if (!ok) fail(Errc::BadConfig, std::string(ervc::to_string(kind)) + ": " + what);
  };
  switch (kind) {
    case LayerKind::Conv2d:
      require(in_channels >= 1 && out_channels >= 1, "channels must be >= 1");
      require(kernel >= 1 && stride >= 1, "kernel and stride must be >= 1");
      require(padding < kernel, "padding must be smaller than the kernel");
      break;
    case LayerKind::MaxPool2d:
      require(kernel >= 1 && stride >= 1, "kernel and stride must be >= 1");
      require(2 * padding <= kernel, "padding must be at most half the kernel");
      break;
    case LayerKind::Linear:
      require(in_features >= 1 && out_features >= 1, "features must be >= 1");
      break;
    case LayerKind::BatchNorm2d:
      require(in_channels >= 1, "channels must be >= 1");
      require(bn_momentum >= 0.0 && bn_momentum <= 1.0, "momentum must be in [0,1]");
      require(bn_eps > 0.0, "eps must be positive");
      break;
    default:
      break;
  }
}

namespace {

void expect_rank(const Shape& s, std::size_t rank, LayerKind kind) {
  if (s.size() != rank)
    fail(Errc::ShapeMismatch, std::string(to_string(kind)) + " expects rank " +
                                  std::to_string(rank) + ", got " + shape_string(s));
}

std::size_t pooled_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                          LayerKind kind) {
  if (in + 2 * p < k)
    fail(Errc::ShapeMismatch, std::string(to_string(kind)) + ": window larger than input");
  return (in + 2 * p - k) / s + 1;
}

}  // namespace

Shape layer_output_shape(const LayerSpec& spec, std::span<const Shape> inputs) {
  if (inputs.size() != spec.arity())
    fail(Errc::ShapeMismatch, std::string(to_string(spec.kind)) + ": wrong number of inputs");
  const Shape& in = inputs[0];
  switch (spec.kind) {
    case LayerKind::Conv2d: {
      expect_rank(in, 4, spec.kind);
      if (in[1] != spec.in_channels)
        fail(Errc::ShapeMismatch, "CONV2D expects " + std::to_string(spec.in_channels) +
                                      " channels, got " + shape_string(in));
      return {in[0], spec.out_channels,
              pooled_extent(in[2], spec.kernel, spec.stride, spec.padding, spec.kind),
              pooled_extent(in[3], spec.kernel, spec.stride, spec.padding, spec.kind)};
    }
    case LayerKind::MaxPool2d:
      expect_rank(in, 4, spec.kind);
      return {in[0], in[1], pooled_extent(in[2], spec.kernel, spec.stride, spec.padding, spec.kind),
              pooled_extent(in[3], spec.kernel, spec.stride, spec.padding, spec.kind)};
    case LayerKind::GlobalAvgPool:
      expect_rank(in, 4, spec.kind);
      return {in[0], in[1]};
    case LayerKind::Linear:
      expect_rank(in, 2, spec.kind);
      if (in[1] != spec.in_features)
        fail(Errc::ShapeMismatch, "LINEAR expects " + std::to_string(spec.in_features) +
                                      " features, got " + shape_string(in));
      return {in[0], spec.out_features};
    case LayerKind::BatchNorm2d:
      expect_rank(in, 4, spec.kind);
      if (in[1] != spec.in_channels)
        fail(Errc::ShapeMismatch, "BATCHNORM2D expects " + std::to_string(spec.in_channels) +
                                      " channels, got " + shape_string(in));
      return in;
    case LayerKind::Add:
      if (inputs[0] != inputs[1])
        fail(Errc::ShapeMismatch,
             "ADD operands " + shape_string(inputs[0]) + " vs " + shape_string(inputs[1]));
      return in;
    case LayerKind::Flatten: {
      if (in.size() < 2) fail(Errc::ShapeMismatch, "FLATTEN needs a batch dimension");
      return {in[0], shape_size(in) / in[0]};
    }
    case LayerKind::Relu:
      return in;
  }
  return in;
}

std::size_t layer_parameter_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::Conv2d:
      return spec.kernel * spec.kernel * spec.in_channels * spec.out_channels +
             (spec.bias ? spec.out_channels : 0);
    case LayerKind::Linear:
      return spec.in_features * spec.out_features + spec.out_features;
    case LayerKind::BatchNorm2d:
      return 2 * spec.in_channels;
    default:
      return 0;
  }
}

template <typename T>
LayerParams<T> init_params(const LayerSpec& spec, std::uint64_t seed) {
  spec.validate();
  LayerParams<T> p;
  SplitMix64 rng(seed);
  auto he_normal = [&rng](Tensor<T>& w, std::size_t fan_in) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w.values()) v = static_cast<T>(stddev * rng.normal());
  };
  switch (spec.kind) {
    case LayerKind::Conv2d:
      p.weight = Tensor<T>({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
      he_normal(p.weight, spec.in_channels * spec.kernel * spec.kernel);
      if (spec.bias) p.bias = Tensor<T>({spec.out_channels});
      break;
    case LayerKind::Linear:
      p.weight = Tensor<T>({spec.out_features, spec.in_features});
      he_normal(p.weight, spec.in_features);
      p.bias = Tensor<T>({spec.out_features});
      break;
    case LayerKind::BatchNorm2d:
      p.weight = Tensor<T>({spec.in_channels}, T{1});
      p.bias = Tensor<T>({spec.in_channels}, T{0});
      p.running_mean = Tensor<T>({spec.in_channels}, T{0});
      p.running_var = Tensor<T>({spec.in_channels}, T{1});
      break;
    default:
      break;
  }
  return p;
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  std::size_t cin, h, w, cout, k, s, p, hout, wout;
  std::size_t patch() const { return cin * k * k; }
  std::size_t plane() const { return hout * wout; }
  bool pointwise() const { return k == 1 && s == 1 && p == 0; }
};

ConvGeometry conv_geometry(const LayerSpec& spec, const Shape& in) {
  const Shape out = layer_output_shape(spec, std::span<const Shape>(&in, 1));
  return {in[1], in[2], in[3], spec.out_channels, spec.kernel, spec.stride,
          spec.padding, out[2], out[3]};
}

// Output columns [lo, hi) whose input column ox*s + kj - p lies inside [0, w).
void valid_range(const ConvGeometry& g, std::size_t kj, std::size_t& lo, std::size_t& hi) {
  lo = kj >= g.p ? 0 : (g.p - kj + g.s - 1) / g.s;
  hi = g.w + g.p > kj ? std::min(g.wout, (g.w + g.p - kj - 1) / g.s + 1) : 0;
  lo = std::min(lo, hi);
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const std::size_t plane = g.plane();
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t ki = 0; ki < g.k; ++ki)
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        T* row = col + ((c * g.k + ki) * g.k + kj) * plane;
        std::size_t lo, hi;
        valid_range(g, kj, lo, hi);
        for (std::size_t oy = 0; oy < g.hout; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.s + ki) -
                                    static_cast<std::ptrdiff_t>(g.p);
          T* dst = row + oy * g.wout;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.wout, T{0});
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          std::fill(dst, dst + lo, T{0});
          if (lo < hi) {
            if (g.s == 1) {
              std::copy(src + (lo + kj - g.p), src + (hi + kj - g.p), dst + lo);
            } else {
              for (std::size_t ox = lo; ox < hi; ++ox) dst[ox] = src[ox * g.s + kj - g.p];
            }
          }
          std::fill(dst + hi, dst + g.wout, T{0});
        }
      }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
  const std::size_t plane = g.plane();
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t ki = 0; ki < g.k; ++ki)
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const T* row = col + ((c * g.k + ki) * g.k + kj) * plane;
        std::size_t lo, hi;
        valid_range(g, kj, lo, hi);
        for (std::size_t oy = 0; oy < g.hout; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.s + ki) -
                                    static_cast<std::ptrdiff_t>(g.p);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.wout;
          if (lo >= hi) continue;
          if (g.s == 1) {
            T* d = dst + (lo + kj - g.p);
            for (std::size_t ox = lo; ox < hi; ++ox) d[ox - lo] += src[ox];
          } else {
            for (std::size_t ox = lo; ox < hi; ++ox) dst[ox * g.s + kj - g.p] += src[ox];
          }
        }
      }
}

template <typename T>
ForwardResult<T> conv_forward(const LayerSpec& spec, const Tensor<T>& x, const LayerParams<T>& prm) {
  const ConvGeometry g = conv_geometry(spec, x.shape());
  const std::size_t n = x.dim(0);
  ForwardResult<T> r;
  r.output = Tensor<T>({n, g.cout, g.hout, g.wout});
  const Eigen::Map<const RowMat<T>> weight(prm.weight.data(), static_cast<Eigen::Index>(g.cout),
                                           static_cast<Eigen::Index>(g.patch()));
  std::vector<T, AlignedAllocator<T>> col(g.pointwise() ? 0 : g.patch() * g.plane());
  for (std::size_t b = 0; b < n; ++b) {
    const T* xb = x.data() + b * g.cin * g.h * g.w;
    if (!g.pointwise()) im2col(xb, g, col.data());
    const Eigen::Map<const RowMat<T>> cols(g.pointwise() ? xb : col.data(),
                                           static_cast<Eigen::Index>(g.patch()),
                                           static_cast<Eigen::Index>(g.plane()));
    Eigen::Map<RowMat<T>> y(r.output.data() + b * g.cout * g.plane(),
                            static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.plane()));
    y.noalias() = weight * cols;
    if (!prm.bias.empty())
      for (std::size_t c = 0; c < g.cout; ++c) y.row(static_cast<Eigen::Index>(c)).array() += prm.bias[c];
  }
  r.cache.saved = x;
  return r;
}

template <typename T>
BackwardResult<T> conv_backward(const LayerSpec& spec, const LayerCache<T>& cache,
                                const LayerParams<T>& prm, const Tensor<T>& gy) {
  const Tensor<T>& x = cache.saved;
  const ConvGeometry g = conv_geometry(spec, x.shape());
  const std::size_t n = x.dim(0);
  BackwardResult<T> r;
  r.grad_weight = Tensor<T>(prm.weight.shape());
  if (!prm.bias.empty()) r.grad_bias = Tensor<T>(prm.bias.shape());
  Tensor<T> gx(x.shape());
  const auto rows = static_cast<Eigen::Index>(g.patch());
  const auto cols_n = static_cast<Eigen::Index>(g.plane());
  const auto cout = static_cast<Eigen::Index>(g.cout);
  const Eigen::Map<const RowMat<T>> weight(prm.weight.data(), cout, rows);
  Eigen::Map<RowMat<T>> gw(r.grad_weight.data(), cout, rows);
  std::vector<T, AlignedAllocator<T>> col(g.pointwise() ? 0 : g.patch() * g.plane());
  std::vector<T, AlignedAllocator<T>> gcol(g.pointwise() ? 0 : g.patch() * g.plane());
  for (std::size_t b = 0; b < n; ++b) {
    const T* xb = x.data() + b * g.cin * g.h * g.w;
    T* gxb = gx.data() + b * g.cin * g.h * g.w;
    const Eigen::Map<const RowMat<T>> dy(gy.data() + b * g.cout * g.plane(), cout, cols_n);
    if (!g.pointwise()) im2col(xb, g, col.data());
    const Eigen::Map<const RowMat<T>> cols(g.pointwise() ? xb : col.data(), rows, cols_n);
    gw.noalias() += dy * cols.transpose();
    if (g.pointwise()) {
      Eigen::Map<RowMat<T>> dx(gxb, rows, cols_n);
      dx.noalias() = weight.transpose() * dy;
    } else {
      Eigen::Map<RowMat<T>> dcol(gcol.data(), rows, cols_n);
      dcol.noalias() = weight.transpose() * dy;
      col2im_add(gcol.data(), g, gxb);
    }
    if (!prm.bias.empty())
      for (std::size_t c = 0; c < g.cout; ++c)
        r.grad_bias[c] += dy.row(static_cast<Eigen::Index>(c)).sum();
  }
  r.grad_inputs.push_back(std::move(gx));
  return r;
}

template <typename T>
ForwardResult<T> maxpool_forward(const LayerSpec& spec, const Tensor<T>& x) {
  const Shape in = x.shape();
  const Shape out_shape = layer_output_shape(spec, std::span<const Shape>(&in, 1));
  const std::size_t n = in[0], c = in[1], h = in[2], w = in[3];
  const std::size_t hout = out_shape[2], wout = out_shape[3];
  ForwardResult<T> r;
  r.output = Tensor<T>(out_shape);
  r.cache.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = x.data() + plane * h * w;
    for (std::size_t oy = 0; oy < hout; ++oy)
      for (std::size_t ox = 0; ox < wout; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t ki = 0; ki < spec.kernel; ++ki) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ki) -
                                    static_cast<std::ptrdiff_t>(spec.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kj = 0; kj < spec.kernel; ++kj) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kj) -
                                      static_cast<std::ptrdiff_t>(spec.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t idx = static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix);
            if (!found || src[idx] > best) {
              best = src[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        r.output[o] = best;
        r.cache.argmax[o] = static_cast<std::uint32_t>(plane * h * w + best_idx);
      }
  }
  return r;
}

// One (sample, channel) plane of an NCHW buffer as an Eigen array.
struct PlaneView {
  std::size_t c, hw;
  template <typename T>
  auto operator()(T* base, std::size_t b, std::size_t ch) const {
    return Eigen::Map<Eigen::Array<std::remove_const_t<T>, Eigen::Dynamic, 1>>(
        base + (b * c + ch) * hw, static_cast<Eigen::Index>(hw));
  }
  template <typename T>
  auto operator()(const T* base, std::size_t b, std::size_t ch) const {
    return Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(base + (b * c + ch) * hw,
                                                                static_cast<Eigen::Index>(hw));
  }
};

template <typename T>
ForwardResult<T> batchnorm_forward(const LayerSpec& spec, const Tensor<T>& x, Mode mode,
                                   const LayerParams<T>& prm) {
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const std::size_t m = n * hw;
  ForwardResult<T> r;
  r.output = Tensor<T>(x.shape());
  r.cache.saved = Tensor<T>(x.shape());
  r.cache.aux = Tensor<T>({c});
  const PlaneView plane{c, hw};
  std::vector<double> means(c), vars(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (std::size_t b = 0; b < n; ++b) sum += plane(x.data(), b, ch).template cast<double>().sum();
      mean = sum / static_cast<double>(m);
      double sq = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        sq += (plane(x.data(), b, ch).template cast<double>() - mean).square().sum();
      var = sq / static_cast<double>(m);
      means[ch] = mean;
      vars[ch] = m > 1 ? sq / static_cast<double>(m - 1) : var;
    } else {
      mean = prm.running_mean[ch];
      var = prm.running_var[ch];
    }
    const double inv_std = 1.0 / std::sqrt(var + spec.bn_eps);
    r.cache.aux[ch] = static_cast<T>(inv_std);
    const T gamma = prm.weight[ch], beta = prm.bias[ch];
    for (std::size_t b = 0; b < n; ++b) {
      auto xh = plane(r.cache.saved.data(), b, ch);
      xh = ((plane(x.data(), b, ch).template cast<double>() - mean) * inv_std).template cast<T>();
      plane(r.output.data(), b, ch) = gamma * xh + beta;
    }
  }
  if (mode == Mode::Train) r.batch_stats.emplace(std::move(means), std::move(vars));
  return r;
}

template <typename T>
BackwardResult<T> batchnorm_backward(const LayerCache<T>& cache, const LayerParams<T>& prm,
                                     const Tensor<T>& gy, bool batch_mode) {
  const Tensor<T>& xhat = cache.saved;
  const std::size_t n = xhat.dim(0), c = xhat.dim(1), hw = xhat.dim(2) * xhat.dim(3);
  const double m = static_cast<double>(n * hw);
  BackwardResult<T> r;
  r.grad_weight = Tensor<T>({c});
  r.grad_bias = Tensor<T>({c});
  Tensor<T> gx(xhat.shape());
  const PlaneView plane{c, hw};
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const auto dy = plane(gy.data(), b, ch).template cast<double>();
      sum_dy += dy.sum();
      sum_dy_xhat += (dy * plane(xhat.data(), b, ch).template cast<double>()).sum();
    }
    r.grad_weight[ch] = static_cast<T>(sum_dy_xhat);
    r.grad_bias[ch] = static_cast<T>(sum_dy);
    const double scale = static_cast<double>(prm.weight[ch]) * cache.aux[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const auto dy = plane(gy.data(), b, ch).template cast<double>();
      auto dx = plane(gx.data(), b, ch);
      if (batch_mode)
        dx = (scale / m * (m * dy - sum_dy - plane(xhat.data(), b, ch).template cast<double>() * sum_dy_xhat))
                 .template cast<T>();
      else
        dx = (scale * dy).template cast<T>();
    }
  }
  r.grad_inputs.push_back(std::move(gx));
  return r;
}

}  // namespace

template <typename T>
ForwardResult<T> layer_forward(const LayerSpec& spec, std::span<const Tensor<T>* const> inputs,
                               Mode mode, const LayerParams<T>& params) {
  std::vector<Shape> shapes;
  for (const auto* t : inputs) shapes.push_back(t->shape());
  const Shape out_shape = layer_output_shape(spec, shapes);
  const Tensor<T>& x = *inputs[0];
  ForwardResult<T> r;
  switch (spec.kind) {
    case LayerKind::Conv2d:
      r = conv_forward(spec, x, params);
      break;
    case LayerKind::Relu:
      r.output = x;
      for (auto& v : r.output.values()) v = v > T{0} ? v : T{0};
      r.cache.saved = r.output;
      break;
    case LayerKind::MaxPool2d:
      r = maxpool_forward(spec, x);
      break;
    case LayerKind::GlobalAvgPool: {
      r.output = Tensor<T>(out_shape);
      const std::size_t hw = x.dim(2) * x.dim(3);
      for (std::size_t i = 0; i < r.output.size(); ++i) {
        double sum = 0.0;
        const T* p = x.data() + i * hw;
        for (std::size_t j = 0; j < hw; ++j) sum += p[j];
        r.output[i] = static_cast<T>(sum / static_cast<double>(hw));
      }
      break;
    }
    case LayerKind::Linear: {
      r.output = Tensor<T>(out_shape);
      const auto n = static_cast<Eigen::Index>(x.dim(0));
      const auto in = static_cast<Eigen::Index>(spec.in_features);
      const auto out = static_cast<Eigen::Index>(spec.out_features);
      const Eigen::Map<const RowMat<T>> xm(x.data(), n, in);
      const Eigen::Map<const RowMat<T>> wm(params.weight.data(), out, in);
      Eigen::Map<RowMat<T>> ym(r.output.data(), n, out);
      ym.noalias() = xm * wm.transpose();
      const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(params.bias.data(), out);
      ym.rowwise() += bias;
      r.cache.saved = x;
      break;
    }
    case LayerKind::BatchNorm2d:
      r = batchnorm_forward(spec, x, mode, params);
      break;
    case LayerKind::Add:
      r.output = x;
      r.output += *inputs[1];
      break;
    case LayerKind::Flatten:
      r.output = x;
      r.output.reshape(out_shape);
      break;
  }
  r.cache.input_shapes = std::move(shapes);
  r.cache.mode = mode;
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const LayerSpec& spec, const LayerCache<T>& cache,
                                 const LayerParams<T>& params, const Tensor<T>& grad_output) {
  if (cache.input_shapes.empty()) fail(Errc::ShapeMismatch, "backward without a forward cache");
  {
    const Shape expected = layer_output_shape(spec, cache.input_shapes);
    if (grad_output.shape() != expected)
      fail(Errc::ShapeMismatch, std::string(to_string(spec.kind)) + " backward: gradient " +
                                    shape_string(grad_output.shape()) + ", expected " +
                                    shape_string(expected));
  }
  BackwardResult<T> r;
  switch (spec.kind) {
    case LayerKind::Conv2d:
      return conv_backward(spec, cache, params, grad_output);
    case LayerKind::Relu: {
      Tensor<T> gx = grad_output;
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (!(cache.saved[i] > T{0})) gx[i] = T{0};
      r.grad_inputs.push_back(std::move(gx));
      return r;
    }
    case LayerKind::MaxPool2d: {
      Tensor<T> gx(cache.input_shapes[0]);
      for (std::size_t o = 0; o < grad_output.size(); ++o) gx[cache.argmax[o]] += grad_output[o];
      r.grad_inputs.push_back(std::move(gx));
      return r;
    }
    case LayerKind::GlobalAvgPool: {
      const Shape& in = cache.input_shapes[0];
      const std::size_t hw = in[2] * in[3];
      Tensor<T> gx(in);
      const T scale = T{1} / static_cast<T>(hw);
      for (std::size_t i = 0; i < grad_output.size(); ++i) {
        const T g = grad_output[i] * scale;
        std::fill(gx.data() + i * hw, gx.data() + (i + 1) * hw, g);
      }
      r.grad_inputs.push_back(std::move(gx));
      return r;
    }
    case LayerKind::Linear: {
      const Tensor<T>& x = cache.saved;
      const auto n = static_cast<Eigen::Index>(x.dim(0));
      const auto in = static_cast<Eigen::Index>(spec.in_features);
      const auto out = static_cast<Eigen::Index>(spec.out_features);
      const Eigen::Map<const RowMat<T>> xm(x.data(), n, in);
      const Eigen::Map<const RowMat<T>> wm(params.weight.data(), out, in);
      const Eigen::Map<const RowMat<T>> dy(grad_output.data(), n, out);
      r.grad_weight = Tensor<T>(params.weight.shape());
      r.grad_bias = Tensor<T>(params.bias.shape());
      Eigen::Map<RowMat<T>>(r.grad_weight.data(), out, in).noalias() = dy.transpose() * xm;
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(r.grad_bias.data(), out) = dy.colwise().sum();
      Tensor<T> gx(x.shape());
      Eigen::Map<RowMat<T>>(gx.data(), n, in).noalias() = dy * wm;
      r.grad_inputs.push_back(std::move(gx));
      return r;
    }
    case LayerKind::BatchNorm2d:
      return batchnorm_backward(cache, params, grad_output, cache.mode == Mode::Train);
    case LayerKind::Add:
      r.grad_inputs = {grad_output, grad_output};
      return r;
    case LayerKind::Flatten: {
      Tensor<T> gx = grad_output;
      gx.reshape(cache.input_shapes[0]);
      r.grad_inputs.push_back(std::move(gx));
      return r;
    }
  }
  return r;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2) fail(Errc::ShapeMismatch, "softmax expects [batch, classes]");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const T* row = logits.data() + b * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < k; ++j) out[b * k + j] = static_cast<T>(std::exp(row[j] - mx) / z);
  }
  return out;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> targets) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size())
    fail(Errc::ShapeMismatch, "logits " + shape_string(logits.shape()) + " vs " +
                                  std::to_string(targets.size()) + " targets");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  for (std::size_t t : targets)
    if (t >= k) fail(Errc::BadTargetIndex, "target " + std::to_string(t));
  LossResult<T> r{T{0}, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const T* row = logits.data() + b * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double log_z = std::log(z) + mx;
    total += log_z - row[targets[b]];
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - log_z);
      r.grad_logits[b * k + j] =
          static_cast<T>((p - (j == targets[b] ? 1.0 : 0.0)) / static_cast<double>(n));
    }
  }
  r.loss = static_cast<T>(total / static_cast<double>(n));
  return r;
}

#define ERVC_INSTANTIATE_LAYERS(T)                                                              \
  template LayerParams<T> init_params<T>(const LayerSpec&, std::uint64_t);                     \
  template ForwardResult<T> layer_forward<T>(const LayerSpec&, std::span<const Tensor<T>* const>, \
                                             Mode, const LayerParams<T>&);                      \
  template BackwardResult<T> layer_backward<T>(const LayerSpec&, const LayerCache<T>&,          \
                                               const LayerParams<T>&, const Tensor<T>&);        \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                              \
  template LossResult<T> softmax_cross_entropy<T>(const Tensor<T>&, std::span<const std::size_t>);

ERVC_INSTANTIATE_LAYERS(float)
ERVC_INSTANTIATE_LAYERS(double)

}  // namespace ervc
