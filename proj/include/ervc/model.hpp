#pragma once

// Layer graph with a forward tape and reverse-mode gradient propagation.
// Nodes are kept in topological order: a node may only consume the model
// input (index -1) or earlier nodes. The last node is the model output.

#include <cstdint>
#include <string>
#include <vector>

#include "ervc/layers.hpp"

namespace ervc {

struct Node {
  std::string name;
  LayerSpec spec;
  std::vector<int> inputs;  // -1 is the model input
};

template <typename T>
struct Tape {
  std::vector<Tensor<T>> outputs;
  std::vector<LayerCache<T>> caches;
};

template <typename T>
struct Gradients {
  std::vector<Tensor<T>> weight;  // per node; empty for parameterless nodes
  std::vector<Tensor<T>> bias;
  Tensor<T> input;
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
class Model {
public:
  Model() = default;
  explicit Model(Shape sample_shape) : sample_shape_(std::move(sample_shape)) {}

  /// Appends a node; returns its index. Throws BadConfig / ShapeMismatch.
  int add(std::string name, LayerSpec spec, std::vector<int> inputs);
  int add(std::string name, LayerSpec spec, int input) {
    return add(std::move(name), spec, std::vector<int>{input});
  }

  /// Re-initializes all parameters from `seed` (per-node derived seeds).
  void init(std::uint64_t seed);

  /// Train mode updates batch-norm running statistics.
  Tensor<T> forward(const Tensor<T>& x, Mode mode, Tape<T>* tape = nullptr);
  /// Forward in `mode` without touching running statistics.
  Tensor<T> apply(const Tensor<T>& x, Mode mode, Tape<T>* tape = nullptr) const;
  /// Eval-mode forward; never mutates the model.
  Tensor<T> infer(const Tensor<T>& x, Tape<T>* tape = nullptr) const {
    return apply(x, Mode::Eval, tape);
  }

  Gradients<T> backward(const Tape<T>& tape, const Tensor<T>& grad_output) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  LayerParams<T>& params(std::size_t i) { return params_.at(i); }
  const LayerParams<T>& params(std::size_t i) const { return params_.at(i); }

  /// Per-sample input shape (without batch dimension).
  const Shape& sample_shape() const noexcept { return sample_shape_; }
  /// Per-sample output shape of node i.
  const Shape& node_shape(std::size_t i) const { return shapes_.at(i); }

  /// Learnable tensors in node order: "<node>.weight", "<node>.bias".
  std::vector<NamedTensor<T>> parameters();
  /// Learnable tensors plus running statistics.
  std::vector<NamedTensor<T>> state();

  std::size_t parameter_count() const;

private:
  Shape sample_shape_;
  std::vector<Node> nodes_;
  std::vector<LayerParams<T>> params_;
  std::vector<Shape> shapes_;
};

}  // namespace ervc
