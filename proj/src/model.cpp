#include "ervc/model.hpp"

#include <algorithm>

#include "ervc/rng.hpp"

namespace ervc {

template <typename T>
int Model<T>::add(std::string name, LayerSpec spec, std::vector<int> inputs) {
  spec.validate();
  if (sample_shape_.empty()) fail(Errc::BadConfig, "model has no input shape");
  if (inputs.size() != spec.arity())
    fail(Errc::BadConfig, name + ": " + std::string(to_string(spec.kind)) + " takes " +
                              std::to_string(spec.arity()) + " input(s)");
  for (const auto& n : nodes_)
    if (n.name == name) fail(Errc::BadConfig, "duplicate node name " + name);
  std::vector<Shape> in_shapes;
  for (int i : inputs) {
    if (i < -1 || i >= static_cast<int>(nodes_.size()))
      fail(Errc::BadConfig, name + ": input must be an earlier node");
    Shape s = i < 0 ? sample_shape_ : shapes_[static_cast<std::size_t>(i)];
    s.insert(s.begin(), 1);
    in_shapes.push_back(std::move(s));
  }
  Shape out = layer_output_shape(spec, in_shapes);
  out.erase(out.begin());
  const std::uint64_t seed = splitmix64_mix(nodes_.size() + 1);
  nodes_.push_back({std::move(name), spec, std::move(inputs)});
  params_.push_back(init_params<T>(spec, seed));
  shapes_.push_back(std::move(out));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
void Model<T>::init(std::uint64_t seed) {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    params_[i] = init_params<T>(nodes_[i].spec, splitmix64_mix(seed ^ splitmix64_mix(i + 1)));
}

namespace {

template <typename T>
struct RunResult {
  Tensor<T> output;
  std::vector<std::pair<std::size_t, std::pair<std::vector<double>, std::vector<double>>>> stats;
};

template <typename T>
RunResult<T> run_graph(const std::vector<Node>& nodes, const std::vector<LayerParams<T>>& params,
                       const Shape& sample_shape, const Tensor<T>& x, Mode mode, Tape<T>* tape) {
  if (nodes.empty()) fail(Errc::BadConfig, "empty model");
  if (x.rank() != sample_shape.size() + 1 ||
      !std::equal(sample_shape.begin(), sample_shape.end(), x.shape().begin() + 1))
    fail(Errc::ShapeMismatch, "model input " + shape_string(x.shape()) + ", expected [N]+" +
                                  shape_string(sample_shape));
  // Last consumer of each node, so intermediate activations can be dropped early.
  std::vector<std::size_t> last_use(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int in : nodes[i].inputs)
      if (in >= 0) last_use[static_cast<std::size_t>(in)] = i;
  last_use.back() = nodes.size();

  std::vector<Tensor<T>> outputs(nodes.size());
  if (tape) {
    tape->outputs.assign(nodes.size(), Tensor<T>{});
    tape->caches.assign(nodes.size(), LayerCache<T>{});
  }
  RunResult<T> result;
  std::vector<const Tensor<T>*> args;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    args.clear();
    for (int in : nodes[i].inputs)
      args.push_back(in < 0 ? &x : &outputs[static_cast<std::size_t>(in)]);
    auto fr = layer_forward<T>(nodes[i].spec, args, mode, params[i]);
    if (fr.batch_stats) result.stats.emplace_back(i, std::move(*fr.batch_stats));
    outputs[i] = std::move(fr.output);
    if (tape) {
      tape->caches[i] = std::move(fr.cache);
    } else {
      for (int in : nodes[i].inputs)
        if (in >= 0 && last_use[static_cast<std::size_t>(in)] == i)
          outputs[static_cast<std::size_t>(in)] = Tensor<T>{};
    }
  }
  if (tape) {
    tape->outputs = outputs;
  }
  result.output = std::move(outputs.back());
  return result;
}

}  // namespace

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x, Mode mode, Tape<T>* tape) {
  auto r = run_graph(nodes_, params_, sample_shape_, x, mode, tape);
  for (auto& [i, stats] : r.stats) {
    auto& p = params_[i];
    const double m = nodes_[i].spec.bn_momentum;
    for (std::size_t c = 0; c < stats.first.size(); ++c) {
      p.running_mean[c] = static_cast<T>((1.0 - m) * p.running_mean[c] + m * stats.first[c]);
      p.running_var[c] = static_cast<T>((1.0 - m) * p.running_var[c] + m * stats.second[c]);
    }
  }
  return std::move(r.output);
}

template <typename T>
Tensor<T> Model<T>::apply(const Tensor<T>& x, Mode mode, Tape<T>* tape) const {
  return run_graph(nodes_, params_, sample_shape_, x, mode, tape).output;
}

template <typename T>
Gradients<T> Model<T>::backward(const Tape<T>& tape, const Tensor<T>& grad_output) const {
  if (tape.caches.size() != nodes_.size()) fail(Errc::ShapeMismatch, "tape does not match model");
  Gradients<T> g;
  g.weight.resize(nodes_.size());
  g.bias.resize(nodes_.size());
  std::vector<Tensor<T>> grad_out(nodes_.size());
  grad_out.back() = grad_output;
  for (std::size_t k = nodes_.size(); k-- > 0;) {
    if (grad_out[k].empty()) continue;
    auto br = layer_backward<T>(nodes_[k].spec, tape.caches[k], params_[k], grad_out[k]);
    grad_out[k] = Tensor<T>{};
    g.weight[k] = std::move(br.grad_weight);
    g.bias[k] = std::move(br.grad_bias);
    for (std::size_t j = 0; j < nodes_[k].inputs.size(); ++j) {
      const int in = nodes_[k].inputs[j];
      Tensor<T>& target = in < 0 ? g.input : grad_out[static_cast<std::size_t>(in)];
      if (target.empty())
        target = std::move(br.grad_inputs[j]);
      else
        target += br.grad_inputs[j];
    }
  }
  return g;
}

template <typename T>
std::vector<NamedTensor<T>> Model<T>::parameters() {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!params_[i].weight.empty()) out.push_back({nodes_[i].name + ".weight", &params_[i].weight});
    if (!params_[i].bias.empty()) out.push_back({nodes_[i].name + ".bias", &params_[i].bias});
  }
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> Model<T>::state() {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& p = params_[i];
    const std::string& n = nodes_[i].name;
    if (!p.weight.empty()) out.push_back({n + ".weight", &p.weight});
    if (!p.bias.empty()) out.push_back({n + ".bias", &p.bias});
    if (!p.running_mean.empty()) out.push_back({n + ".running_mean", &p.running_mean});
    if (!p.running_var.empty()) out.push_back({n + ".running_var", &p.running_var});
  }
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.weight.size() + p.bias.size();
  return total;
}

template class Model<float>;
template class Model<double>;

}  // namespace ervc
