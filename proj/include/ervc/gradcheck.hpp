#pragma once

// Central finite differences against backprop.

#include <cstdint>
#include <functional>
#include <span>

#include "ervc/model.hpp"

namespace ervc {

/// |a - n| / max(|a|, |n|, floor), maximized over coordinates.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = 1e-6);

template <typename T>
struct Objective {
  double loss;
  Tensor<T> grad;  // d loss / d output
};

/// Scalar objective over a model output.
template <typename T>
using OutputLoss = std::function<Objective<T>(const Tensor<T>&)>;

/// sum(output * weights), weights fixed by `seed`; works for any output shape.
template <typename T>
OutputLoss<T> projection_loss(const Shape& output_shape, std::uint64_t seed);

template <typename T>
OutputLoss<T> cross_entropy_loss(std::vector<std::size_t> targets);

struct GradCheckOptions {
  double eps = 1e-4;
  Mode mode = Mode::Train;
  /// Coordinates sampled per tensor (all if the tensor is smaller).
  std::size_t max_coords_per_tensor = 24;
  bool check_input = true;
  double floor = 1e-6;
  std::uint64_t seed = 7;
  /// Multiplies every analytic gradient before comparison (checker self-test).
  double analytic_scale = 1.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

/// Perturbs parameters and (optionally) inputs one coordinate at a time; never
/// changes running statistics. The model is restored before returning.
template <typename T>
GradCheckReport finite_diff_check(Model<T>& model, const Tensor<T>& input, const OutputLoss<T>& loss,
                                  const GradCheckOptions& options = {});

/// Same check, but the difference quotients come from a float64 copy of `model`
/// evaluated with `reference_loss`, so they are not limited by the precision of T.
template <typename T>
GradCheckReport finite_diff_check_reference(Model<T>& model, const Tensor<T>& input, const OutputLoss<T>& loss,
                                            const OutputLoss<double>& reference_loss,
                                            const GradCheckOptions& options = {});

/// Element-wise precision cast of a model, its parameters and running statistics.
template <typename To, typename From>
Model<To> cast_model(const Model<From>& model);

template <typename To, typename From>
Tensor<To> cast_tensor(const Tensor<From>& t) {
  if (t.empty()) return {};
  Tensor<To> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return out;
}

}  // namespace ervc
