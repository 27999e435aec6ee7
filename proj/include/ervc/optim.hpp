#pragma once

#include <span>
#include <vector>

#include "ervc/model.hpp"

namespace ervc {

/// Defaults are not taken from any reported configuration; they are the
/// conventional SGDM starting point.
struct OptimizerConfig {
  double lr = 0.01;
  double momentum = 0.9;

  /// Throws BadConfig unless lr > 0 and momentum in [0, 1).
  void validate() const;
};

/// v <- momentum * v + g;  p <- p - lr * v.
/// `velocities` is resized (zero-filled) on first use. Throws ShapeMismatch.
template <typename T>
void sgdm_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads,
               std::vector<Tensor<T>>& velocities, const OptimizerConfig& config);

template <typename T>
class Sgdm {
public:
  explicit Sgdm(OptimizerConfig config) : config_(config) { config_.validate(); }

  /// Applies one step to every learnable tensor of `model`; missing gradients count as zero.
  void step(Model<T>& model, const Gradients<T>& grads);

  const OptimizerConfig& config() const noexcept { return config_; }
  const std::vector<Tensor<T>>& velocities() const noexcept { return velocities_; }

private:
  OptimizerConfig config_;
  std::vector<Tensor<T>> velocities_;
};

}  // namespace ervc
