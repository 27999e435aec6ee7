#include "ervc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ervc/rng.hpp"

namespace ervc {

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

template <typename T>
OutputLoss<T> projection_loss(const Shape& output_shape, std::uint64_t seed) {
  Tensor<T> weights(output_shape);
  SplitMix64 rng(seed);
  for (auto& w : weights.values()) w = static_cast<T>(rng.uniform(-1.0, 1.0));
  return [weights](const Tensor<T>& out) {
    if (out.shape() != weights.shape()) fail(Errc::ShapeMismatch, "projection loss shape");
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) loss += static_cast<double>(out[i]) * weights[i];
    return Objective<T>{loss, weights};
  };
}

template <typename T>
OutputLoss<T> cross_entropy_loss(std::vector<std::size_t> targets) {
  return [targets = std::move(targets)](const Tensor<T>& logits) {
    // Loss recomputed in double so the difference quotient is not limited by T.
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    double total = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* row = logits.data() + b * k;
      const double mx = *std::max_element(row, row + k);
      double z = 0.0;
      for (std::size_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
      total += std::log(z) + mx - row[targets[b]];
    }
    auto r = softmax_cross_entropy<T>(logits, targets);
    return Objective<T>{total / static_cast<double>(n), std::move(r.grad_logits)};
  };
}

namespace {

std::vector<std::size_t> sample_coords(std::size_t size, std::size_t max, SplitMix64& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (size <= max) return idx;
  for (std::size_t i = 0; i < max; ++i) std::swap(idx[i], idx[i + rng.below(size - i)]);
  idx.resize(max);
  return idx;
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(Model<T>& model, const Tensor<T>& input, const OutputLoss<T>& loss,
                                  const GradCheckOptions& options) {
  Tape<T> tape;
  const Tensor<T> out = model.apply(input, options.mode, &tape);
  const Objective<T> objective = loss(out);
  const Gradients<T> grads = model.backward(tape, objective.grad);

  auto evaluate = [&](const Tensor<T>& x) { return loss(model.apply(x, options.mode)).loss; };

  std::vector<double> analytic, numeric;
  SplitMix64 rng(options.seed);
  auto probe = [&](Tensor<T>& target, const Tensor<T>& grad, const Tensor<T>& x) {
    for (std::size_t c : sample_coords(target.size(), options.max_coords_per_tensor, rng)) {
      const T original = target[c];
      const T up = static_cast<T>(original + options.eps);
      const T down = static_cast<T>(original - options.eps);
      target[c] = up;
      const double f_up = evaluate(x);
      target[c] = down;
      const double f_down = evaluate(x);
      target[c] = original;
      numeric.push_back((f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down)));
      analytic.push_back(grad.empty() ? 0.0 : options.analytic_scale * grad[c]);
    }
  };

  for (std::size_t i = 0; i < model.nodes().size(); ++i) {
    auto& p = model.params(i);
    if (!p.weight.empty()) probe(p.weight, grads.weight[i], input);
    if (!p.bias.empty()) probe(p.bias, grads.bias[i], input);
  }
  if (options.check_input) {
    Tensor<T> x = input;
    for (std::size_t c : sample_coords(x.size(), options.max_coords_per_tensor, rng)) {
      const T original = x[c];
      const T up = static_cast<T>(original + options.eps);
      const T down = static_cast<T>(original - options.eps);
      x[c] = up;
      const double f_up = evaluate(x);
      x[c] = down;
      const double f_down = evaluate(x);
      x[c] = original;
      numeric.push_back((f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down)));
      analytic.push_back(grads.input.empty() ? 0.0 : options.analytic_scale * grads.input[c]);
    }
  }
  return {max_relative_error(analytic, numeric, options.floor), analytic.size()};
}

template <typename To, typename From>
Model<To> cast_model(const Model<From>& model) {
  Model<To> out(model.sample_shape());
  for (const Node& n : model.nodes()) out.add(n.name, n.spec, n.inputs);
  for (std::size_t i = 0; i < model.nodes().size(); ++i) {
    const LayerParams<From>& src = model.params(i);
    LayerParams<To>& dst = out.params(i);
    dst.weight = cast_tensor<To>(src.weight);
    dst.bias = cast_tensor<To>(src.bias);
    dst.running_mean = cast_tensor<To>(src.running_mean);
    dst.running_var = cast_tensor<To>(src.running_var);
  }
  return out;
}

template <typename T>
GradCheckReport finite_diff_check_reference(Model<T>& model, const Tensor<T>& input, const OutputLoss<T>& loss,
                                            const OutputLoss<double>& reference_loss,
                                            const GradCheckOptions& options) {
  Tape<T> tape;
  const Tensor<T> out = model.apply(input, options.mode, &tape);
  const Gradients<T> grads = model.backward(tape, loss(out).grad);

  Model<double> ref = cast_model<double>(model);
  Tensor<double> x = cast_tensor<double>(input);
  auto evaluate = [&] { return reference_loss(ref.apply(x, options.mode)).loss; };

  std::vector<double> analytic, numeric;
  SplitMix64 rng(options.seed);
  auto probe = [&](Tensor<double>& target, const Tensor<T>& grad) {
    for (std::size_t c : sample_coords(target.size(), options.max_coords_per_tensor, rng)) {
      const double original = target[c];
      target[c] = original + options.eps;
      const double f_up = evaluate();
      target[c] = original - options.eps;
      const double f_down = evaluate();
      target[c] = original;
      numeric.push_back((f_up - f_down) / (2.0 * options.eps));
      analytic.push_back(grad.empty() ? 0.0 : options.analytic_scale * grad[c]);
    }
  };
  for (std::size_t i = 0; i < ref.nodes().size(); ++i) {
    auto& p = ref.params(i);
    if (!p.weight.empty()) probe(p.weight, grads.weight[i]);
    if (!p.bias.empty()) probe(p.bias, grads.bias[i]);
  }
  if (options.check_input) probe(x, grads.input);
  return {max_relative_error(analytic, numeric, options.floor), analytic.size()};
}

#define ERVC_INSTANTIATE_GRADCHECK(T)                                                         \
  template OutputLoss<T> projection_loss<T>(const Shape&, std::uint64_t);                     \
  template OutputLoss<T> cross_entropy_loss<T>(std::vector<std::size_t>);                     \
  template GradCheckReport finite_diff_check<T>(Model<T>&, const Tensor<T>&, const OutputLoss<T>&, \
                                                const GradCheckOptions&);                              \
  template GradCheckReport finite_diff_check_reference<T>(Model<T>&, const Tensor<T>&, const OutputLoss<T>&,   \
                                                          const OutputLoss<double>&, const GradCheckOptions&); \
  template Model<double> cast_model<double, T>(const Model<T>&);                                              \
  template Model<float> cast_model<float, T>(const Model<T>&);

ERVC_INSTANTIATE_GRADCHECK(float)
ERVC_INSTANTIATE_GRADCHECK(double)

}  // namespace ervc
