#include "mejem/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "mejem/errors.hpp"
#include "mejem/model.hpp"

namespace mejem {

std::string to_string(ScoreKind kind) { return kind == ScoreKind::Softmax ? "softmax" : "energy"; }

ScoreKind score_kind_from_string(const std::string& s) {
  if (s == "softmax") return ScoreKind::Softmax;
  if (s == "energy") return ScoreKind::Energy;
  throw ConfigError("unknown score kind '" + s + "'");
}

std::vector<double> softmax_score(const Tensor& logits) {
  const Tensor p = class_posteriors(logits);
  const auto n = p.rows(), k = p.cols();
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = p.data().subspan(r * k, k);
    out[r] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

std::vector<double> energy_score(const Tensor& logits) {
  const Tensor lse = logsumexp(logits.detach());
  return {lse.data().begin(), lse.data().end()};
}

std::vector<double> ood_score(const Tensor& logits, ScoreKind kind) {
  return kind == ScoreKind::Softmax ? softmax_score(logits) : energy_score(logits);
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const auto n = logits.rows(), k = logits.cols();
  std::vector<int> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = logits.data().subspan(r * k, k);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double lower_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw MetricError("quantile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  q = std::clamp(q, 0.0, 1.0);
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
  return sorted[std::min(idx, sorted.size() - 1)];
}

Threshold calibrate_threshold(std::span<const double> id_val_scores, double target_tpr, ScoreKind kind) {
  if (id_val_scores.size() < kMinCalibrationSamples) {
    throw CalibrationError("calibrate_threshold: need at least " + std::to_string(kMinCalibrationSamples) +
                           " ID validation scores, got " + std::to_string(id_val_scores.size()));
  }
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) throw CalibrationError("calibrate_threshold: target_tpr not in (0, 1]");
  return {lower_quantile(id_val_scores, 1.0 - target_tpr), kind, target_tpr};
}

std::vector<int> predict_open_set(const Tensor& logits, const Threshold& threshold) {
  const auto scores = ood_score(logits, threshold.score_kind);
  auto labels = argmax_rows(logits);
  const int reject = static_cast<int>(logits.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (scores[i] < threshold.delta) labels[i] = reject;
  }
  return labels;
}

}  // namespace mejem
