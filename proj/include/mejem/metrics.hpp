#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mejem {

/// ID is the positive class: higher scores are more in-distribution.
struct OodMetrics {
  double auroc = 0.0;
  double fpr95 = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

/// P(score_id > score_ood) + 0.5 P(tie), via the rank-sum statistic.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Fraction of OOD scores >= the (1 - tpr) lower quantile of the ID scores.
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr = 0.95);

OodMetrics ood_metrics(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Closed-set accuracy.
double closed_set_precision(std::span<const int> pred, std::span<const int> truth);

struct HistogramSpec {
  std::size_t bin_count = 50;
  // Pooled min/max over all origins when unset.
  std::optional<double> lo;
  std::optional<double> hi;
};

struct Histogram {
  std::vector<double> edges;  // bin_count + 1 shared edges
  std::map<std::string, std::vector<std::size_t>> counts;
};

Histogram histogram(const std::map<std::string, std::vector<double>>& scores_by_origin, const HistogramSpec& spec);

/// bin_left,bin_right,count_id,count_ood
void write_histogram_csv(std::ostream& os, const Histogram& h);
/// Overlaid step plot of the "id" and "ood" counts.
void write_histogram_svg(std::ostream& os, const Histogram& h, const std::string& title);

}  // namespace mejem
