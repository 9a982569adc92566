#include "mejem/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "mejem/errors.hpp"

namespace mejem {

std::string to_string(Split split) {
  switch (split) {
    case Split::IdTrain: return "id_train";
    case Split::IdVal: return "id_val";
    case Split::IdTest: return "id_test";
    case Split::AuxOod: return "aux_ood";
    case Split::OodTest: return "ood_test";
  }
  return "unknown";
}

Split split_from_string(const std::string& s) {
  for (auto sp : {Split::IdTrain, Split::IdVal, Split::IdTest, Split::AuxOod, Split::OodTest})
    if (to_string(sp) == s) return sp;
  throw ConfigError("unknown split '" + s + "'");
}

bool is_id_split(Split split) { return split == Split::IdTrain || split == Split::IdVal || split == Split::IdTest; }

void LabeledBatch::check(int num_classes) const {
  if (features.ndim() != 2 || features.rows() != labels.size()) {
    throw DataError("batch: " + std::to_string(labels.size()) + " labels for features of shape " +
                    shape_to_string(features.shape()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const bool ok = is_id_split(split) ? (y >= 0 && y < num_classes) : y == kOutlierLabel;
    if (!ok) {
      throw DataError("batch: row " + std::to_string(i) + " has label " + std::to_string(y) + " invalid for split " +
                      to_string(split));
    }
  }
}

LabeledBatch LabeledBatch::subset(std::span<const std::size_t> rows) const {
  const auto d = dim();
  std::vector<double> f;
  f.reserve(rows.size() * d);
  std::vector<int> y;
  y.reserve(rows.size());
  for (auto r : rows) {
    auto src = features.data().subspan(r * d, d);
    f.insert(f.end(), src.begin(), src.end());
    y.push_back(labels.at(r));
  }
  return {Tensor::from(Shape{rows.size(), d}, std::move(f)), std::move(y), split};
}

LabeledBatch LabeledBatch::with_split(Split s) const { return {features, labels, s}; }

LabeledBatch gen_gaussian_mixture(int k, int n_per_class, double mean_radius, double std, std::uint64_t seed,
                                  std::size_t dim, Split split) {
  if (k < 2) throw ConfigError("gen_gaussian_mixture: k must be >= 2");
  if (n_per_class < 1) throw ConfigError("gen_gaussian_mixture: n_per_class must be >= 1");
  if (dim < 2) throw ConfigError("gen_gaussian_mixture: dim must be >= 2");
  if (!(std >= 0.0)) throw ConfigError("gen_gaussian_mixture: std must be >= 0");
  if (!is_id_split(split)) throw ConfigError("gen_gaussian_mixture: split must be an ID split");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<std::size_t>(k) * static_cast<std::size_t>(n_per_class);
  std::vector<double> f(n * dim);
  std::vector<int> y(n);
  std::size_t row = 0;
  for (int c = 0; c < k; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / k;
    const double cx = mean_radius * std::cos(angle), cy = mean_radius * std::sin(angle);
    for (int i = 0; i < n_per_class; ++i, ++row) {
      double* out = f.data() + row * dim;
      out[0] = cx + std * gauss(rng);
      out[1] = cy + std * gauss(rng);
      for (std::size_t j = 2; j < dim; ++j) out[j] = std * gauss(rng);
      y[row] = c;
    }
  }
  return {Tensor::from(Shape{n, dim}, std::move(f)), std::move(y), split};
}

LabeledBatch gen_ring_ood(int n, double radius, double noise_std, std::uint64_t seed, std::size_t dim) {
  if (n <= 0) throw ConfigError("gen_ring_ood: n must be positive");
  if (dim < 2) throw ConfigError("gen_ring_ood: dim must be >= 2");
  if (!(noise_std >= 0.0)) throw ConfigError("gen_ring_ood: noise_std must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> theta(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto rows = static_cast<std::size_t>(n);
  std::vector<double> f(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double* out = f.data() + r * dim;
    const double a = theta(rng);
    out[0] = radius * std::cos(a) + noise_std * gauss(rng);
    out[1] = radius * std::sin(a) + noise_std * gauss(rng);
    for (std::size_t j = 2; j < dim; ++j) out[j] = noise_std * gauss(rng);
  }
  return {Tensor::from(Shape{rows, dim}, std::move(f)), std::vector<int>(rows, kOutlierLabel), Split::OodTest};
}

LabeledBatch gen_aux_outliers(int n, double box_halfwidth, double exclusion_radius, std::uint64_t seed,
                              std::size_t dim, AuxOutlierStats* stats) {
  if (n <= 0) throw ConfigError("gen_aux_outliers: n must be positive");
  if (dim < 1) throw ConfigError("gen_aux_outliers: dim must be >= 1");
  if (!(exclusion_radius >= 0.0) || !(box_halfwidth > exclusion_radius)) {
    throw ConfigError("gen_aux_outliers: need box_halfwidth > exclusion_radius >= 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-box_halfwidth, box_halfwidth);
  const auto rows = static_cast<std::size_t>(n);
  // Giving up after 100 attempts per requested point means acceptance < 1%.
  const std::size_t max_attempts = 100 * rows;
  std::vector<double> f;
  f.reserve(rows * dim);
  std::vector<double> p(dim);
  AuxOutlierStats st;
  while (st.accepted < rows) {
    if (st.attempts >= max_attempts) {
      throw ConfigError("gen_aux_outliers: acceptance rate below 1% (box halfwidth " + std::to_string(box_halfwidth) +
                        ", exclusion radius " + std::to_string(exclusion_radius) + ")");
    }
    ++st.attempts;
    double r2 = 0.0;
    for (auto& v : p) {
      v = u(rng);
      r2 += v * v;
    }
    if (std::sqrt(r2) <= exclusion_radius) continue;
    f.insert(f.end(), p.begin(), p.end());
    ++st.accepted;
  }
  if (stats) *stats = st;
  return {Tensor::from(Shape{rows, dim}, std::move(f)), std::vector<int>(rows, kOutlierLabel), Split::AuxOod};
}

std::pair<LabeledBatch, LabeledBatch> carve(const LabeledBatch& batch, double fraction, std::uint64_t seed,
                                            Split second_split) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("carve: fraction must be in [0, 1)");
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_second = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(batch.size())));
  std::vector<std::size_t> second(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_second));
  std::vector<std::size_t> first(idx.begin() + static_cast<std::ptrdiff_t>(n_second), idx.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {batch.subset(first), batch.subset(second).with_split(second_split)};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

LabeledBatch parse_feature_csv(std::istream& in, int k, Split split, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) parse_fail(source, line_no, "empty file, expected header");
  const auto header = split_csv_line(trim(line));
  if (header.size() < 2 || trim(header.back()) != "label") {
    parse_fail(source, line_no, "header must be feature_0,...,feature_{d-1},label");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (trim(header[j]) != "feature_" + std::to_string(j)) {
      parse_fail(source, line_no, "header column " + std::to_string(j) + " should be feature_" + std::to_string(j));
    }
  }

  std::vector<double> f;
  std::vector<int> y;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != d + 1) {
      parse_fail(source, line_no, "expected " + std::to_string(d + 1) + " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto cell = trim(cells[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        parse_fail(source, line_no, "non-numeric feature '" + cell + "' in column " + std::to_string(j));
      }
      if (!std::isfinite(v)) parse_fail(source, line_no, "non-finite feature in column " + std::to_string(j));
      f.push_back(v);
    }
    const auto cell = trim(cells[d]);
    int label = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
      parse_fail(source, line_no, "non-integer label '" + cell + "'");
    }
    if (label < kOutlierLabel || label >= k) {
      parse_fail(source, line_no, "label " + std::to_string(label) + " outside [-1, " + std::to_string(k) + ")");
    }
    const bool ok = is_id_split(split) ? label >= 0 : label == kOutlierLabel;
    if (!ok) parse_fail(source, line_no, "label " + std::to_string(label) + " not allowed in split " + to_string(split));
    y.push_back(label);
  }
  const auto n = y.size();
  return {Tensor::from(Shape{n, d}, std::move(f)), std::move(y), split};
}

LabeledBatch load_feature_csv(const std::filesystem::path& path, int k, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  return parse_feature_csv(in, k, split, path.string());
}

void write_feature_csv(std::ostream& out, const LabeledBatch& batch) {
  const auto d = batch.dim();
  for (std::size_t j = 0; j < d; ++j) out << "feature_" << j << ',';
  out << "label\n" << std::setprecision(17);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) out << batch.features.data()[r * d + j] << ',';
    out << batch.labels[r] << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, const LabeledBatch& batch) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature file " + path.string());
  write_feature_csv(out, batch);
}

Normalizer fit_normalizer(const LabeledBatch& batch) {
  if (batch.split != Split::IdTrain) {
    throw ContractError("fit_normalizer: statistics must come from id_train, got " + to_string(batch.split));
  }
  if (batch.size() == 0) throw DataError("fit_normalizer: empty batch");
  const auto n = batch.size(), d = batch.dim();
  Normalizer norm{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  auto f = batch.features.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) norm.mean[j] += f[r * d + j];
  for (auto& m : norm.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = f[r * d + j] - norm.mean[j];
      norm.std[j] += c * c;
    }
  for (auto& s : norm.std) s = std::max(std::sqrt(s / static_cast<double>(n)), kStdFloor);
  return norm;
}

LabeledBatch apply_normalizer(const Normalizer& norm, const LabeledBatch& batch) {
  const auto n = batch.size(), d = batch.dim();
  if (norm.mean.size() != d) {
    throw DimensionError("apply_normalizer: normalizer has dimension " + std::to_string(norm.mean.size()) +
                         ", batch has " + std::to_string(d));
  }
  std::vector<double> out(batch.features.data().begin(), batch.features.data().end());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = (out[r * d + j] - norm.mean[j]) / norm.std[j];
  return {Tensor::from(Shape{n, d}, std::move(out)), batch.labels, batch.split};
}

std::pair<std::vector<double>, std::vector<double>> feature_box(const LabeledBatch& batch) {
  const auto n = batch.size(), d = batch.dim();
  if (n == 0) throw DataError("feature_box: empty batch");
  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
  auto f = batch.features.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], f[r * d + j]);
      hi[j] = std::max(hi[j], f[r * d + j]);
    }
  return {lo, hi};
}

}  // namespace mejem
