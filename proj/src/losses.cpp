#include "mejem/losses.hpp"

#include <memory>

#include "mejem/errors.hpp"

namespace mejem {

namespace {

Tensor mask_tensor(std::span<const bool> flags, bool want) {
  std::vector<double> m(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) m[i] = flags[i] == want ? 1.0 : 0.0;
  return Tensor::vector(std::move(m));
}

double mean_of(const Tensor& t) {
  if (t.numel() == 0) return 0.0;
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.numel());
}

// std::vector<bool> is bit-packed and cannot back a span<const bool>.
class FlagArray {
 public:
  FlagArray(std::size_t n, bool value) : n_(n), flags_(new bool[n]) {
    for (std::size_t i = 0; i < n; ++i) flags_[i] = value;
  }
  std::span<const bool> view() const { return {flags_.get(), n_}; }

 private:
  std::size_t n_;
  std::unique_ptr<bool[]> flags_;
};

bool has_rows(const Tensor& t) { return t.ndim() == 2 && t.rows() > 0; }

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.ndim() != 2) throw DimensionError("cross_entropy: logits must be [n x K]");
  const auto k = logits.cols();
  if (labels.size() != logits.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.rows()) + " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw DataError("cross_entropy: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                      " outside [0," + std::to_string(k) + ")");
    }
  }
  return mean(sub(logsumexp(logits), gather(logits, labels)));
}

Tensor generative_loss(const ModelParams& params, const Tensor& x_pos, const Tensor& x_neg) {
  if (x_pos.ndim() != 2 || x_neg.ndim() != 2 || x_pos.cols() != x_neg.cols()) {
    throw DimensionError("generative_loss: shapes " + shape_to_string(x_pos.shape()) + " and " +
                         shape_to_string(x_neg.shape()) + " are incompatible");
  }
  const Tensor pos = marginal_energy(forward(params, x_pos));
  const Tensor neg_e = marginal_energy(forward(params, x_neg.detach()));
  return sub(mean(pos), mean(neg_e));
}

Tensor margin_loss(const Tensor& energies, std::span<const bool> is_ood, const MarginConfig& cfg) {
  if (energies.ndim() != 1 || energies.numel() != is_ood.size()) {
    throw DimensionError("margin_loss: " + std::to_string(is_ood.size()) + " flags for energies of shape " +
                         shape_to_string(energies.shape()));
  }
  if (energies.numel() == 0) return Tensor::scalar(0.0);
  const Tensor id_part = mul(square(hinge(energies, cfg.m_in)), mask_tensor(is_ood, false));
  const Tensor ood_part = mul(hinge(neg(energies), -cfg.m_out), mask_tensor(is_ood, true));
  return sum(add(id_part, ood_part));
}

ObjectiveTerms mejem_objective(const ModelParams& params, const ObjectiveBatch& batch, const LossWeights& weights,
                               const MarginConfig& margin_cfg, const ObjectiveFlags& flags) {
  if (weights.generative < 0.0 || weights.margin < 0.0) throw ConfigError("loss weights must be non-negative");
  const bool use_gen = flags.generative && weights.generative > 0.0;
  const bool use_margin = flags.margin && weights.margin > 0.0;
  if (use_margin && !has_rows(batch.aux_x)) {
    throw ConfigError("margin loss requires auxiliary outlier data");
  }
  if (use_gen && !has_rows(batch.neg_x)) throw ConfigError("generative loss requires negative samples");

  ObjectiveTerms terms;
  const Tensor logits = forward(params, batch.id_x);
  const Tensor id_energy = marginal_energy(logits);
  terms.mean_id_energy = mean_of(id_energy);

  const Tensor ce = cross_entropy(logits, batch.id_y);
  terms.cross_entropy = ce.item();
  Tensor total = ce;

  if (use_gen) {
    const Tensor neg_energy = marginal_energy(forward(params, batch.neg_x.detach()));
    terms.mean_neg_energy = mean_of(neg_energy);
    const Tensor gen = sub(mean(id_energy), mean(neg_energy));
    terms.generative = gen.item();
    total = add(total, scale(gen, weights.generative));
  }

  if (use_margin) {
    const Tensor aux_energy = marginal_energy(forward(params, batch.aux_x));
    terms.mean_ood_energy = mean_of(aux_energy);
    const Tensor id_margin_energy = margin_cfg.id_energy == IdMarginEnergy::Joint
                                        ? joint_energy(logits, batch.id_y)
                                        : id_energy;
    const FlagArray id_flags(batch.id_y.size(), false);
    const FlagArray ood_flags(aux_energy.numel(), true);
    const Tensor id_term = margin_loss(id_margin_energy, id_flags.view(), margin_cfg);
    const Tensor ood_term = margin_loss(aux_energy, ood_flags.view(), margin_cfg);
    const double n_total = static_cast<double>(batch.id_y.size() + aux_energy.numel());
    const Tensor margin = scale(add(id_term, ood_term), 1.0 / n_total);
    terms.margin = margin.item();
    total = add(total, scale(margin, weights.margin));
  }

  terms.total = total;
  return terms;
}

ObjectiveTerms mejem_objective(const ModelParams& params, Tensor id_x, std::vector<int> id_y, Tensor aux_x,
                               ReplayBuffer& buffer, const LossWeights& weights, const MarginConfig& margin_cfg,
                               const SgldConfig& sgld_cfg, const ObjectiveFlags& flags, Rng& rng) {
  ObjectiveBatch batch{std::move(id_x), std::move(id_y), std::move(aux_x), Tensor::zeros(Shape{0, buffer.dim()})};
  if (flags.generative && weights.generative > 0.0) {
    batch.neg_x = sample_negatives(params, buffer, static_cast<int>(batch.id_y.size()), sgld_cfg, rng);
  }
  return mejem_objective(params, batch, weights, margin_cfg, flags);
}

}  // namespace mejem
