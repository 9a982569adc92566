#include "mejem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "mejem/errors.hpp"
#include "mejem/scoring.hpp"

namespace mejem {

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) throw MetricError("auroc: both score lists must be non-empty");
  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.push_back({s, true});
  for (double s : ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Rank sum of ID entries with ties sharing their average rank. Ranks are
  // kept doubled so every quantity stays an exact integer.
  long double id_rank_sum2 = 0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const long double avg_rank2 = static_cast<long double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (all[t].is_id) id_rank_sum2 += avg_rank2;
    i = j;
  }
  const auto n_id = static_cast<long double>(id_scores.size());
  const auto n_ood = static_cast<long double>(ood_scores.size());
  const long double u2 = id_rank_sum2 - n_id * (n_id + 1);
  return static_cast<double>(u2 / 2) / static_cast<double>(n_id * n_ood);
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr) {
  if (id_scores.empty() || ood_scores.empty()) throw MetricError("fpr_at_tpr: both score lists must be non-empty");
  const double delta = lower_quantile(id_scores, 1.0 - tpr);
  const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(), [delta](double s) { return s >= delta; });
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

OodMetrics ood_metrics(std::span<const double> id_scores, std::span<const double> ood_scores) {
  return {auroc(id_scores, ood_scores), fpr_at_tpr(id_scores, ood_scores, 0.95), id_scores.size(),
          ood_scores.size()};
}

double closed_set_precision(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw MetricError("closed_set_precision: " + std::to_string(pred.size()) + " predictions for " +
                      std::to_string(truth.size()) + " labels");
  }
  if (pred.empty()) throw MetricError("closed_set_precision: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Histogram histogram(const std::map<std::string, std::vector<double>>& scores_by_origin, const HistogramSpec& spec) {
  if (spec.bin_count == 0) throw MetricError("histogram: bin_count must be >= 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [origin, scores] : scores_by_origin) {
    for (double s : scores) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (spec.lo) lo = *spec.lo;
  if (spec.hi) hi = *spec.hi;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  if (lo > hi) throw MetricError("histogram: range lower bound exceeds upper bound");

  Histogram h;
  const auto bins = spec.bin_count;
  const double width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges[bins] = hi;
  for (const auto& [origin, scores] : scores_by_origin) {
    auto& counts = h.counts[origin];
    counts.assign(bins, 0);
    for (double s : scores) {
      // Out-of-range values are clamped into the edge bins so totals are conserved.
      auto b = static_cast<long long>(std::floor((s - lo) / width));
      b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
  }
  return h;
}

namespace {

std::size_t count_at(const Histogram& h, const std::string& origin, std::size_t b) {
  auto it = h.counts.find(origin);
  return it == h.counts.end() ? 0 : it->second[b];
}

}  // namespace

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_left,bin_right,count_id,count_ood\n" << std::setprecision(17);
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    os << h.edges[b] << ',' << h.edges[b + 1] << ',' << count_at(h, "id", b) << ',' << count_at(h, "ood", b) << '\n';
  }
}

void write_histogram_svg(std::ostream& os, const Histogram& h, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 360, kPad = 40;
  const std::size_t bins = h.edges.size() - 1;
  std::size_t peak = 1;
  for (const auto& [origin, counts] : h.counts)
    for (auto c : counts) peak = std::max(peak, c);
  const double bw = (kWidth - 2 * kPad) / static_cast<double>(bins);
  const double plot_h = kHeight - 2 * kPad;

  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"14\">"
     << title << "</text>\n";
  const std::pair<const char*, const char*> series[] = {{"id", "#1f77b4"}, {"ood", "#d62728"}};
  for (const auto& [origin, color] : series) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double bar = plot_h * static_cast<double>(count_at(h, origin, b)) / static_cast<double>(peak);
      if (bar <= 0) continue;
      os << "<rect x=\"" << kPad + bw * static_cast<double>(b) << "\" y=\"" << kHeight - kPad - bar
         << "\" width=\"" << bw << "\" height=\"" << bar << "\" fill=\"" << color
         << "\" fill-opacity=\"0.5\"/>\n";
    }
  }
  os << "<line x1=\"" << kPad << "\" y1=\"" << kHeight - kPad << "\" x2=\"" << kWidth - kPad << "\" y2=\""
     << kHeight - kPad << "\" stroke=\"black\"/>\n";
  os << std::setprecision(3);
  os << "<text x=\"" << kPad << "\" y=\"" << kHeight - kPad / 3 << "\" font-family=\"sans-serif\" font-size=\"11\">"
     << h.edges.front() << "</text>\n";
  os << "<text x=\"" << kWidth - kPad << "\" y=\"" << kHeight - kPad / 3
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << h.edges.back() << "</text>\n";
  os << "<text x=\"" << kWidth - kPad << "\" y=\"40\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"12\" fill=\"#1f77b4\">in-distribution</text>\n";
  os << "<text x=\"" << kWidth - kPad << "\" y=\"56\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"12\" fill=\"#d62728\">out-of-distribution</text>\n";
  os << "</svg>\n";
}

}  // namespace mejem
