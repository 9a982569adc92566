#include "mejem/model.hpp"

#include <cmath>
#include <random>

#include "mejem/errors.hpp"

namespace mejem {

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out;
  out.reserve(weights.size() * 2);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

ModelParams ModelParams::frozen() const {
  ModelParams out{layer_sizes, {}, {}, seed};
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.weights.push_back(weights[l].detach());
    out.biases.push_back(biases[l].detach());
  }
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams out{layer_sizes, {}, {}, seed};
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.weights.push_back(weights[l].clone(weights[l].requires_grad()));
    out.biases.push_back(biases[l].clone(biases[l].requires_grad()));
  }
  return out;
}

void ModelParams::zero_grad() {
  for (auto& w : weights) w.zero_grad();
  for (auto& b : biases) b.zero_grad();
}

bool ModelParams::is_finite() const {
  for (const auto& p : parameters())
    if (!p.is_finite()) return false;
  return true;
}

ModelParams init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ConfigError("init_mlp: need at least 2 layer sizes");
  for (auto s : layer_sizes)
    if (s == 0) throw ConfigError("init_mlp: layer sizes must be positive");

  // Uniform(-a, a) with a = sqrt(6 / fan_in) has variance 2 / fan_in.
  std::mt19937_64 rng(seed);
  ModelParams params{layer_sizes, {}, {}, seed};
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = dist(rng);
    params.weights.push_back(Tensor::from(Shape{fan_in, fan_out}, std::move(w), true));
    params.biases.push_back(Tensor::zeros(Shape{fan_out}, true));
  }
  return params;
}

Tensor forward(const ModelParams& params, const Tensor& x) {
  if (x.ndim() != 2 || x.shape()[1] != params.input_dim()) {
    throw DimensionError("forward: input shape " + shape_to_string(x.shape()) + " but model expects [n x " +
                         std::to_string(params.input_dim()) + "]");
  }
  Tensor h = x;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    h = add_bias(matmul(h, params.weights[l]), params.biases[l]);
    if (l + 1 < params.num_layers()) h = relu(h);
  }
  return h;
}

Tensor marginal_energy(const Tensor& logits) { return neg(logsumexp(logits)); }

Tensor joint_energy(const Tensor& logits, std::span<const int> labels) { return neg(gather(logits, labels)); }

Tensor class_posteriors(const Tensor& logits) { return softmax_rows(logits); }

EnergyReadout read_energies(const ModelParams& params, const Tensor& x, std::optional<std::span<const int>> labels) {
  EnergyReadout out{forward(params, x), {}, std::nullopt};
  out.marginal_energy = marginal_energy(out.logits);
  if (labels) out.joint_energy = joint_energy(out.logits, *labels);
  return out;
}

EnergyFn model_energy(const ModelParams& params) {
  return [frozen = params.frozen()](const Tensor& x) { return marginal_energy(forward(frozen, x)); };
}

}  // namespace mejem
