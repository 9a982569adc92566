#include "mejem/sgld.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "mejem/errors.hpp"

namespace mejem {

void SgldConfig::validate(std::size_t dim) const {
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw ConfigError("sgld: step_size must be >= 0");
  if (n_steps < 0) throw ConfigError("sgld: n_steps must be >= 0");
  if (!(reinit_prob >= 0.0 && reinit_prob <= 1.0)) throw ConfigError("sgld: reinit_prob must be in [0, 1]");
  if (box_lo.size() != dim || box_hi.size() != dim) {
    throw ConfigError("sgld: init box has dimension " + std::to_string(box_lo.size()) + "/" +
                      std::to_string(box_hi.size()) + ", expected " + std::to_string(dim));
  }
  for (std::size_t j = 0; j < dim; ++j)
    if (!(box_lo[j] <= box_hi[j])) throw ConfigError("sgld: init box lower bound exceeds upper bound");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  if (dim == 0) throw ConfigError("replay buffer dimension must be positive");
}

std::span<const double> ReplayBuffer::entry(std::size_t slot) const {
  if (slot >= size()) throw std::out_of_range("replay buffer slot " + std::to_string(slot));
  return std::span<const double>(entries_).subspan(slot * dim_, dim_);
}

std::size_t ReplayBuffer::append(std::span<const double> x) {
  if (x.size() != dim_) throw DimensionError("replay buffer: entry has wrong dimension");
  if (full()) throw ContractError("replay buffer: append past capacity");
  entries_.insert(entries_.end(), x.begin(), x.end());
  return size() - 1;
}

void ReplayBuffer::overwrite(std::size_t slot, std::span<const double> x) {
  if (x.size() != dim_) throw DimensionError("replay buffer: entry has wrong dimension");
  if (slot >= size()) throw std::out_of_range("replay buffer slot " + std::to_string(slot));
  std::copy(x.begin(), x.end(), entries_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
}

void ReplayBuffer::restore(std::vector<double> entries) {
  if (entries.size() % dim_ != 0 || entries.size() / dim_ > capacity_) {
    throw DataError("replay buffer: restored payload does not fit capacity/dimension");
  }
  entries_ = std::move(entries);
}

bool ReplayBuffer::is_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

Tensor sgld_step(const Tensor& x, const Tensor& grad_e, double step_size, const Tensor& noise) {
  if (x.shape() != grad_e.shape() || x.shape() != noise.shape()) {
    throw DimensionError("sgld_step: shapes " + shape_to_string(x.shape()) + ", " +
                         shape_to_string(grad_e.shape()) + ", " + shape_to_string(noise.shape()) + " differ");
  }
  if (step_size < 0.0) throw ConfigError("sgld_step: negative step size");
  const double drift = 0.5 * step_size * step_size;
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x.data()[i] - drift * grad_e.data()[i] + step_size * noise.data()[i];
  }
  return Tensor::from(x.shape(), std::move(out));
}

EnergyGradient energy_input_gradient(const EnergyFn& energy, const Tensor& x) {
  Tensor xs = x.clone(true);
  Tensor e = energy(xs);
  if (e.ndim() != 1 || e.shape()[0] != x.rows()) {
    throw DimensionError("energy function returned shape " + shape_to_string(e.shape()) + " for input " +
                         shape_to_string(x.shape()));
  }
  sum(e).backward();
  return {Tensor::from(x.shape(), xs.grad()), std::vector<double>(e.data().begin(), e.data().end())};
}

namespace {

void draw_from_box(const SgldConfig& cfg, Rng& rng, std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    std::uniform_real_distribution<double> u(cfg.box_lo[j], cfg.box_hi[j]);
    out[j] = cfg.box_lo[j] == cfg.box_hi[j] ? cfg.box_lo[j] : u(rng);
  }
}

bool row_finite(std::span<const double> row) {
  return std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

Tensor sample_negatives(const EnergyFn& energy, ReplayBuffer& buffer, int n, const SgldConfig& cfg, Rng& rng,
                        SampleStats* stats) {
  if (n <= 0) throw ConfigError("sample_negatives: n must be positive, got " + std::to_string(n));
  const std::size_t d = buffer.dim();
  cfg.validate(d);
  SampleStats local;
  SampleStats& st = stats ? *stats : local;
  st = {};

  const auto rows = static_cast<std::size_t>(n);
  std::vector<double> x(rows * d);
  std::vector<std::optional<std::size_t>> source(rows);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    std::span<double> row(x.data() + i * d, d);
    if (buffer.empty() || coin(rng) < cfg.reinit_prob) {
      draw_from_box(cfg, rng, row);
      ++st.reinitialized;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
      const auto slot = pick(rng);
      auto e = buffer.entry(slot);
      std::copy(e.begin(), e.end(), row.begin());
      source[i] = slot;
      ++st.from_buffer;
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor state = Tensor::from(Shape{rows, d}, std::move(x));
  for (int k = 0; k < cfg.n_steps; ++k) {
    auto eg = energy_input_gradient(energy, state);
    auto grad = eg.grad.mutable_data();
    auto cur = state.mutable_data();
    for (std::size_t i = 0; i < rows; ++i) {
      const double e = eg.energy[i];
      if (!std::isfinite(e) || std::abs(e) > cfg.divergence_limit) {
        draw_from_box(cfg, rng, cur.subspan(i * d, d));
        std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(i * d), d, 0.0);
        ++st.diverged;
      }
    }
    std::vector<double> noise(rows * d);
    for (auto& z : noise) z = gauss(rng);
    state = sgld_step(state, eg.grad, cfg.step_size, Tensor::from(Shape{rows, d}, std::move(noise)));
  }

  auto out = state.mutable_data();
  for (std::size_t i = 0; i < rows; ++i) {
    auto row = out.subspan(i * d, d);
    if (!row_finite(row)) {
      draw_from_box(cfg, rng, row);
      ++st.diverged;
    }
    if (source[i]) {
      buffer.overwrite(*source[i], row);
    } else if (!buffer.full()) {
      buffer.append(row);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
      buffer.overwrite(pick(rng), row);
    }
  }
  return state;
}

Tensor sample_negatives(const ModelParams& params, ReplayBuffer& buffer, int n, const SgldConfig& cfg, Rng& rng,
                        SampleStats* stats) {
  if (buffer.dim() != params.input_dim()) {
    throw DimensionError("sample_negatives: buffer dimension " + std::to_string(buffer.dim()) +
                         " does not match model input " + std::to_string(params.input_dim()));
  }
  return sample_negatives(model_energy(params), buffer, n, cfg, rng, stats);
}

}  // namespace mejem
