#pragma once

// Layer kernels as pure functions. Activations are NCHW (or NC after
// pooling/flatten). Convolution is cross-correlation with zero padding.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ervc/tensor.hpp"

namespace ervc {

enum class LayerKind { Conv2d, Relu, MaxPool2d, GlobalAvgPool, Linear, BatchNorm2d, Add, Flatten };

std::string_view to_string(LayerKind kind);

enum class Mode { Train, Eval };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t in_channels = 0;   // conv, batchnorm (channels)
  std::size_t out_channels = 0;  // conv
  std::size_t kernel = 1;        // conv, maxpool
  std::size_t stride = 1;        // conv, maxpool
  std::size_t padding = 0;       // conv, maxpool
  bool bias = false;             // conv; linear is always biased
  std::size_t in_features = 0;   // linear
  std::size_t out_features = 0;  // linear
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  static LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                          std::size_t padding, bool bias = false);
  static LayerSpec relu();
  static LayerSpec maxpool2d(std::size_t kernel, std::size_t stride, std::size_t padding = 0);
  static LayerSpec global_avg_pool();
  static LayerSpec linear(std::size_t in, std::size_t out);
  static LayerSpec batchnorm2d(std::size_t channels);
  static LayerSpec add();
  static LayerSpec flatten();

  /// Throws BadConfig.
  void validate() const;
  std::size_t arity() const { return kind == LayerKind::Add ? 2 : 1; }
};

/// Learnable tensors (weight, bias) and non-learnable running statistics.
template <typename T>
struct LayerParams {
  Tensor<T> weight;  // conv [Cout,Cin,k,k]; linear [out,in]; batchnorm scale [C]
  Tensor<T> bias;    // conv (optional) / linear [out]; batchnorm shift [C]
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

template <typename T>
struct LayerCache {
  std::vector<Shape> input_shapes;
  Tensor<T> saved;                 // conv/linear: input; relu: output; batchnorm: x_hat
  Tensor<T> aux;                   // batchnorm: per-channel 1/sqrt(var + eps)
  std::vector<std::uint32_t> argmax;  // maxpool: flat input index per output
  Mode mode = Mode::Train;
};

template <typename T>
struct ForwardResult {
  Tensor<T> output;
  LayerCache<T> cache;
  // batchnorm in Train mode: batch mean and unbiased variance per channel
  std::optional<std::pair<std::vector<double>, std::vector<double>>> batch_stats;
};

template <typename T>
struct BackwardResult {
  std::vector<Tensor<T>> grad_inputs;
  Tensor<T> grad_weight;
  Tensor<T> grad_bias;
};

/// Allocates parameters for `spec` (He-normal weights, zero biases/shifts,
/// unit scales, zero running mean, unit running variance).
template <typename T>
LayerParams<T> init_params(const LayerSpec& spec, std::uint64_t seed);

/// Throws ShapeMismatch.
template <typename T>
ForwardResult<T> layer_forward(const LayerSpec& spec, std::span<const Tensor<T>* const> inputs,
                               Mode mode, const LayerParams<T>& params);

template <typename T>
BackwardResult<T> layer_backward(const LayerSpec& spec, const LayerCache<T>& cache,
                                 const LayerParams<T>& params, const Tensor<T>& grad_output);

/// Output shape for the given input shapes. Throws ShapeMismatch.
Shape layer_output_shape(const LayerSpec& spec, std::span<const Shape> inputs);

/// Learnable scalar count (running statistics excluded).
std::size_t layer_parameter_count(const LayerSpec& spec);

template <typename T>
struct LossResult {
  T loss;
  Tensor<T> grad_logits;
};

/// Mean over the batch of -log softmax(logits)[target]. Throws BadTargetIndex.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> targets);

/// Row-wise softmax of a [batch, classes] tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace ervc
