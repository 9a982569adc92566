#pragma once

#include <span>
#include <vector>

#include "mejem/model.hpp"
#include "mejem/sgld.hpp"
#include "mejem/tensor.hpp"

namespace mejem {

struct LossWeights {
  double generative = 1.0;  // lambda_1
  double margin = 0.05;     // lambda_2
};

enum class IdMarginEnergy { Marginal, Joint };

struct MarginConfig {
  double m_in = -10.0;
  double m_out = -10.0;
  // Which energy the ID branch of the margin loss uses. OOD rows always use
  // the marginal energy since they carry no label.
  IdMarginEnergy id_energy = IdMarginEnergy::Marginal;
};

struct ObjectiveFlags {
  bool generative = true;
  bool margin = true;
};

/// mean_i [ logsumexp(logits_i) - logits_i[y_i] ]
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// mean E(x_pos) - mean E(x_neg), with x_neg treated as a constant.
Tensor generative_loss(const ModelParams& params, const Tensor& x_pos, const Tensor& x_neg);

/// Sum over rows of max(E - m_in, 0)^2 (ID rows) and max(m_out - E, 0) (OOD rows).
Tensor margin_loss(const Tensor& energies, std::span<const bool> is_ood, const MarginConfig& cfg);

/// One training step's worth of inputs. Negatives are sampled beforehand so
/// that the objective is a pure function of the parameters.
struct ObjectiveBatch {
  Tensor id_x;
  std::vector<int> id_y;
  Tensor aux_x;  // [0 x d] when absent
  Tensor neg_x;  // [0 x d] when absent
};

struct ObjectiveTerms {
  Tensor total;
  double cross_entropy = 0.0;
  double generative = 0.0;
  double margin = 0.0;
  double mean_id_energy = 0.0;
  double mean_ood_energy = 0.0;
  double mean_neg_energy = 0.0;
};

/// CE + lambda_1 * generative + lambda_2 * margin / (n_id + n_aux).
/// A term is skipped entirely when its flag is off or its weight is zero.
ObjectiveTerms mejem_objective(const ModelParams& params, const ObjectiveBatch& batch, const LossWeights& weights,
                               const MarginConfig& margin_cfg, const ObjectiveFlags& flags);

/// Convenience overload that draws the negatives from the buffer first.
ObjectiveTerms mejem_objective(const ModelParams& params, Tensor id_x, std::vector<int> id_y, Tensor aux_x,
                               ReplayBuffer& buffer, const LossWeights& weights, const MarginConfig& margin_cfg,
                               const SgldConfig& sgld_cfg, const ObjectiveFlags& flags, Rng& rng);

}  // namespace mejem
