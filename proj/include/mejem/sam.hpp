#pragma once

#include <functional>
#include <vector>

#include "mejem/model.hpp"
#include "mejem/tensor.hpp"

namespace mejem {

struct SamConfig {
  bool enabled = true;
  double rho = 0.05;
  double beta = 5e-4;  // L2 coefficient; contributes 2 * beta * theta to the gradient
  double base_lr = 0.1;
  double momentum = 0.9;
  int warmup_steps = 1000;
  std::vector<int> decay_epochs{35, 70, 100};
  double decay_factor = 0.2;

  void validate() const;
};

struct OptimizerState {
  std::vector<std::vector<double>> momentum;  // one buffer per parameter tensor
  long long step = 0;
  int epoch = 0;
};

OptimizerState init_optimizer_state(const ModelParams& params);

/// Linear warmup to base_lr over warmup_steps, then step decay by epoch.
double lr_at(long long step, int epoch, const SamConfig& cfg);

/// rho * g / ||g||_2, or zeros when ||g||_2 < 1e-12.
std::vector<double> sam_perturbation(std::span<const double> grads, double rho);

/// Concatenated gradients of all parameters in ModelParams::parameters() order.
std::vector<double> flatten_grads(const ModelParams& params);

/// Evaluates the loss at the current parameters. Must be deterministic and
/// build its graph from the parameter tensors it is given.
using LossFn = std::function<Tensor(const ModelParams&)>;

struct SamStepResult {
  double loss = 0.0;            // at theta
  double perturbed_loss = 0.0;  // at theta + eps (equals loss when SAM is off)
  double lr = 0.0;
  double grad_norm = 0.0;
};

/// One SAM (or plain SGD when disabled) update with momentum and L2.
SamStepResult sam_step(ModelParams& params, const LossFn& loss_fn, OptimizerState& state, const SamConfig& cfg);

}  // namespace mejem
