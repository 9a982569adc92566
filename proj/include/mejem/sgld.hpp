#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "mejem/model.hpp"
#include "mejem/tensor.hpp"

namespace mejem {

using Rng = std::mt19937_64;

struct SgldConfig {
  double step_size = 0.1;  // epsilon
  int n_steps = 15;        // K
  double reinit_prob = 0.05;
  // Chains start uniformly inside [box_lo, box_hi] per dimension.
  std::vector<double> box_lo;
  std::vector<double> box_hi;
  // Chains whose |E| exceeds this are restarted from the init distribution.
  double divergence_limit = 1e6;

  void validate(std::size_t dim) const;
};

/// Persistent pool of SGLD chain states.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t dim);

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size() / dim_; }
  bool empty() const { return entries_.empty(); }
  bool full() const { return size() == capacity_; }

  std::span<const double> entry(std::size_t slot) const;
  std::span<const double> raw() const { return entries_; }

  /// Appends while below capacity; returns the slot written.
  std::size_t append(std::span<const double> x);
  void overwrite(std::size_t slot, std::span<const double> x);
  /// Replaces the whole contents (used when restoring from a checkpoint).
  void restore(std::vector<double> entries);

  bool is_finite() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::vector<double> entries_;  // row-major [size x dim]
};

/// x - (eps^2 / 2) * grad_e + eps * noise
Tensor sgld_step(const Tensor& x, const Tensor& grad_e, double step_size, const Tensor& noise);

/// Gradient of sum(energy(x)) with respect to x; rows are independent, so
/// this is the per-chain energy gradient. Also returns the energies.
struct EnergyGradient {
  Tensor grad;
  std::vector<double> energy;
};
EnergyGradient energy_input_gradient(const EnergyFn& energy, const Tensor& x);

struct SampleStats {
  std::size_t from_buffer = 0;
  std::size_t reinitialized = 0;
  std::size_t diverged = 0;
};

/// Runs n persistent chains for cfg.n_steps Langevin steps on the given
/// energy and writes the final states back into the buffer.
Tensor sample_negatives(const EnergyFn& energy, ReplayBuffer& buffer, int n, const SgldConfig& cfg, Rng& rng,
                        SampleStats* stats = nullptr);

/// Same, with the model's marginal energy. Parameter gradients are untouched.
Tensor sample_negatives(const ModelParams& params, ReplayBuffer& buffer, int n, const SgldConfig& cfg, Rng& rng,
                        SampleStats* stats = nullptr);

}  // namespace mejem
