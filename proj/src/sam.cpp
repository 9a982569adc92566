#include "mejem/sam.hpp"

#include <cmath>
#include <sstream>

#include "mejem/errors.hpp"

namespace mejem {

void SamConfig::validate() const {
  if (!(rho >= 0.0)) throw ConfigError("sam: rho must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("sam: beta must be >= 0");
  if (!(base_lr > 0.0)) throw ConfigError("sam: base_lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("sam: momentum must be in [0, 1)");
  if (warmup_steps < 0) throw ConfigError("sam: warmup_steps must be >= 0");
  if (!(decay_factor > 0.0)) throw ConfigError("sam: decay_factor must be > 0");
  for (std::size_t i = 1; i < decay_epochs.size(); ++i) {
    if (decay_epochs[i] <= decay_epochs[i - 1]) throw ConfigError("sam: decay_epochs must be strictly increasing");
  }
}

OptimizerState init_optimizer_state(const ModelParams& params) {
  OptimizerState state;
  for (const auto& p : params.parameters()) state.momentum.emplace_back(p.numel(), 0.0);
  return state;
}

double lr_at(long long step, int epoch, const SamConfig& cfg) {
  if (step < cfg.warmup_steps) {
    return cfg.base_lr * static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
  }
  double lr = cfg.base_lr;
  for (int e : cfg.decay_epochs)
    if (e <= epoch) lr *= cfg.decay_factor;
  return lr;
}

std::vector<double> sam_perturbation(std::span<const double> grads, double rho) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  std::vector<double> eps(grads.size(), 0.0);
  if (norm < 1e-12 || rho == 0.0) return eps;
  const double s = rho / norm;
  for (std::size_t i = 0; i < grads.size(); ++i) eps[i] = s * grads[i];
  return eps;
}

std::vector<double> flatten_grads(const ModelParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const auto& p : params.parameters()) {
    const auto g = p.grad();
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

namespace {

double evaluate(ModelParams& params, const LossFn& loss_fn, const char* where, long long step) {
  params.zero_grad();
  Tensor loss = loss_fn(params);
  const double value = loss.item();
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite loss " << value << " at " << where << " (optimizer step " << step << ")";
    throw DivergenceError(os.str());
  }
  loss.backward();
  return value;
}

void add_to_params(ModelParams& params, std::span<const double> delta) {
  std::size_t offset = 0;
  for (auto p : params.parameters()) {
    auto d = p.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += delta[offset + i];
    offset += d.size();
  }
}

std::vector<std::vector<double>> snapshot(const ModelParams& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params.parameters()) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore(ModelParams& params, const std::vector<std::vector<double>>& saved) {
  auto ps = params.parameters();
  for (std::size_t j = 0; j < ps.size(); ++j) {
    auto d = ps[j].mutable_data();
    std::copy(saved[j].begin(), saved[j].end(), d.begin());
  }
}

}  // namespace

SamStepResult sam_step(ModelParams& params, const LossFn& loss_fn, OptimizerState& state, const SamConfig& cfg) {
  if (state.momentum.size() != params.parameters().size()) {
    throw ContractError("sam_step: optimizer state does not match parameters");
  }
  SamStepResult result;
  result.loss = evaluate(params, loss_fn, "theta", state.step);
  result.perturbed_loss = result.loss;
  std::vector<double> grads = flatten_grads(params);
  {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    result.grad_norm = std::sqrt(sq);
  }

  if (cfg.enabled) {
    const auto eps = sam_perturbation(grads, cfg.rho);
    const auto saved = snapshot(params);
    add_to_params(params, eps);
    result.perturbed_loss = evaluate(params, loss_fn, "theta + eps", state.step);
    grads = flatten_grads(params);
    restore(params, saved);
  }

  result.lr = lr_at(state.step, state.epoch, cfg);
  std::size_t offset = 0;
  auto ps = params.parameters();
  for (std::size_t j = 0; j < ps.size(); ++j) {
    auto theta = ps[j].mutable_data();
    auto& v = state.momentum[j];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double d = grads[offset + i];
      if (cfg.beta != 0.0) d += 2.0 * cfg.beta * theta[i];
      v[i] = cfg.momentum * v[i] + d;
      theta[i] -= result.lr * v[i];
    }
    offset += theta.size();
  }
  ++state.step;
  params.zero_grad();
  return result;
}

}  // namespace mejem
