#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mejem/tensor.hpp"

namespace mejem {

enum class Split { IdTrain, IdVal, IdTest, AuxOod, OodTest };

std::string to_string(Split split);
Split split_from_string(const std::string& s);
bool is_id_split(Split split);

inline constexpr int kOutlierLabel = -1;

/// Feature rows plus labels. ID splits carry labels in [0, K); outlier
/// splits carry kOutlierLabel on every row.
struct LabeledBatch {
  Tensor features;  // [n x d]
  std::vector<int> labels;
  Split split = Split::IdTrain;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.ndim() == 2 ? features.cols() : 0; }

  /// Throws DataError if the split/label invariant is violated.
  void check(int num_classes) const;

  LabeledBatch subset(std::span<const std::size_t> rows) const;
  LabeledBatch with_split(Split s) const;
};

LabeledBatch gen_gaussian_mixture(int k, int n_per_class, double mean_radius, double std, std::uint64_t seed,
                                  std::size_t dim = 2, Split split = Split::IdTrain);

LabeledBatch gen_ring_ood(int n, double radius, double noise_std, std::uint64_t seed, std::size_t dim = 2);

struct AuxOutlierStats {
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  double acceptance() const { return attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0; }
};

/// Uniform in [-w, w]^dim with the ball of exclusion_radius around the origin removed.
LabeledBatch gen_aux_outliers(int n, double box_halfwidth, double exclusion_radius, std::uint64_t seed,
                              std::size_t dim = 2, AuxOutlierStats* stats = nullptr);

/// Splits rows into (first, second) with round(fraction * n) rows in second,
/// chosen by a seeded shuffle.
std::pair<LabeledBatch, LabeledBatch> carve(const LabeledBatch& batch, double fraction, std::uint64_t seed,
                                            Split second_split);

/// Reads "feature_0,...,feature_{d-1},label" CSV. Labels of -1 mark outliers;
/// the split is taken from the argument and checked against the labels.
LabeledBatch load_feature_csv(const std::filesystem::path& path, int k, Split split);
LabeledBatch parse_feature_csv(std::istream& in, int k, Split split, const std::string& source = "<stream>");
void write_feature_csv(std::ostream& out, const LabeledBatch& batch);
void write_feature_csv(const std::filesystem::path& path, const LabeledBatch& batch);

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-dimension mean/std of an id_train batch.
Normalizer fit_normalizer(const LabeledBatch& batch);
LabeledBatch apply_normalizer(const Normalizer& norm, const LabeledBatch& batch);

/// Per-dimension [min, max] of the features.
std::pair<std::vector<double>, std::vector<double>> feature_box(const LabeledBatch& batch);

}  // namespace mejem
