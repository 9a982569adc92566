#pragma once

#include <span>
#include <string>
#include <vector>

#include "mejem/tensor.hpp"

namespace mejem {

enum class ScoreKind { Softmax, Energy };

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& s);

/// Maximum class posterior per row.
std::vector<double> softmax_score(const Tensor& logits);

/// logsumexp of the logits per row (the negated marginal energy).
std::vector<double> energy_score(const Tensor& logits);

std::vector<double> ood_score(const Tensor& logits, ScoreKind kind);

/// Index of the largest logit per row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

struct Threshold {
  double delta = 0.0;
  ScoreKind score_kind = ScoreKind::Energy;
  double target_tpr = 0.95;
};

/// Lower empirical quantile: sorted[floor(q * (n - 1))].
double lower_quantile(std::span<const double> values, double q);

inline constexpr std::size_t kMinCalibrationSamples = 20;

/// delta such that at least target_tpr of the ID validation scores are >= delta.
Threshold calibrate_threshold(std::span<const double> id_val_scores, double target_tpr, ScoreKind kind);

/// Argmax class, or K (the reject label) when the score is strictly below delta.
std::vector<int> predict_open_set(const Tensor& logits, const Threshold& threshold);

}  // namespace mejem
