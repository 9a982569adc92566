#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mejem/tensor.hpp"

namespace mejem {

/// Weights and biases of the MLP classifier f_theta.
///
/// Layer l maps layer_sizes[l] -> layer_sizes[l+1]; weights[l] has shape
/// [in x out] so that a batch [n x in] multiplies on the left.
struct ModelParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }

  /// Weights then biases, layer by layer. This order defines the flattened
  /// parameter vector used by the optimizer and the checkpoint format.
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;

  /// Copy whose tensors carry no gradient tracking; forward passes through it
  /// never touch the original parameter gradients.
  ModelParams frozen() const;
  ModelParams clone() const;

  void zero_grad();
  bool is_finite() const;
};

ModelParams init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

/// Affine + relu for every hidden layer, affine output. [n x d] -> [n x K]
Tensor forward(const ModelParams& params, const Tensor& x);

/// E(x) = -logsumexp(logits), per row.
Tensor marginal_energy(const Tensor& logits);

/// E(x, y) = -logits[y], per row.
Tensor joint_energy(const Tensor& logits, std::span<const int> labels);

/// Row-wise softmax p(y | x).
Tensor class_posteriors(const Tensor& logits);

struct EnergyReadout {
  Tensor logits;
  Tensor marginal_energy;
  std::optional<Tensor> joint_energy;
};

EnergyReadout read_energies(const ModelParams& params, const Tensor& x,
                            std::optional<std::span<const int>> labels = std::nullopt);

/// Maps a batch [n x d] to per-row energies [n]. The sampler is written
/// against this so it can run on hand-built energies as well as models.
using EnergyFn = std::function<Tensor(const Tensor&)>;

/// Marginal energy of the model, evaluated through frozen parameters.
EnergyFn model_energy(const ModelParams& params);

}  // namespace mejem
