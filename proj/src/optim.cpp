#include "ervc/optim.hpp"

namespace ervc {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) fail(Errc::BadConfig, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(Errc::BadConfig, "momentum must be in [0, 1)");
}

template <typename T>
void sgdm_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads,
               std::vector<Tensor<T>>& velocities, const OptimizerConfig& config) {
  if (params.size() != grads.size())
    fail(Errc::ShapeMismatch, "parameter and gradient lists differ in length");
  if (velocities.empty())
    for (const auto* p : params) velocities.emplace_back(p->shape());
  if (velocities.size() != params.size())
    fail(Errc::ShapeMismatch, "velocity store does not match parameters");
  const T lr = static_cast<T>(config.lr);
  const T mu = static_cast<T>(config.momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    Tensor<T>& v = velocities[i];
    const Tensor<T>& g = *grads[i];
    if (g.shape() != p.shape() || v.shape() != p.shape())
      fail(Errc::ShapeMismatch, "gradient " + shape_string(g.shape()) + " for parameter " +
                                    shape_string(p.shape()));
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = mu * v[j] + g[j];
      p[j] -= lr * v[j];
    }
  }
}

template <typename T>
void Sgdm<T>::step(Model<T>& model, const Gradients<T>& grads) {
  std::vector<Tensor<T>*> params;
  std::vector<Tensor<T>> zeros;
  std::vector<const Tensor<T>*> gs;
  // Collect zero placeholders first so the pointers stay valid.
  std::size_t missing = 0;
  for (std::size_t i = 0; i < model.nodes().size(); ++i) {
    if (!model.params(i).weight.empty() && grads.weight[i].empty()) ++missing;
    if (!model.params(i).bias.empty() && grads.bias[i].empty()) ++missing;
  }
  zeros.reserve(missing);
  for (std::size_t i = 0; i < model.nodes().size(); ++i) {
    auto& p = model.params(i);
    for (auto [param, grad] : {std::pair{&p.weight, &grads.weight[i]}, std::pair{&p.bias, &grads.bias[i]}}) {
      if (param->empty()) continue;
      params.push_back(param);
      if (grad->empty()) {
        zeros.emplace_back(param->shape());
        gs.push_back(&zeros.back());
      } else {
        gs.push_back(grad);
      }
    }
  }
  sgdm_step<T>(params, gs, velocities_, config_);
}

template void sgdm_step<float>(std::span<Tensor<float>* const>, std::span<const Tensor<float>* const>,
                               std::vector<Tensor<float>>&, const OptimizerConfig&);
template void sgdm_step<double>(std::span<Tensor<double>* const>,
                                std::span<const Tensor<double>* const>, std::vector<Tensor<double>>&,
                                const OptimizerConfig&);
template class Sgdm<float>;
template class Sgdm<double>;

}  // namespace ervc
