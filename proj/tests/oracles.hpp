#pragma once

// Independent reference implementations used only by tests. They are written
// directly from the defining formulas with scalar loops and long double
// accumulation, and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mejem/tensor.hpp"

namespace oracle {

inline double logsumexp(const std::vector<double>& row) {
  long double s = 0;
  for (double v : row) s += std::exp(static_cast<long double>(v));
  return static_cast<double>(std::log(s));
}

inline std::vector<double> softmax(const std::vector<double>& row) {
  long double m = *std::max_element(row.begin(), row.end());
  long double s = 0;
  for (double v : row) s += std::exp(static_cast<long double>(v) - m);
  std::vector<double> out;
  for (double v : row) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v) - m) / s));
  return out;
}

inline double max_softmax(const std::vector<double>& row) {
  const auto p = softmax(row);
  return *std::max_element(p.begin(), p.end());
}

inline double margin_term(double energy, bool is_ood, double m_in, double m_out) {
  if (is_ood) return energy < m_out ? m_out - energy : 0.0;
  return energy > m_in ? (energy - m_in) * (energy - m_in) : 0.0;
}

inline double sgld_coordinate(double x, double g, double eps, double z) { return x - eps * eps / 2.0 * g + eps * z; }

inline std::vector<double> sam_perturbation(const std::vector<double>& g, double rho) {
  long double sq = 0;
  for (double v : g) sq += static_cast<long double>(v) * v;
  const double norm = static_cast<double>(std::sqrt(sq));
  std::vector<double> out(g.size(), 0.0);
  if (norm < 1e-12) return out;
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = rho * g[i] / norm;
  return out;
}

/// Pairwise Mann-Whitney count, ties worth one half.
inline double auroc_pairwise(const std::vector<double>& id, const std::vector<double>& ood) {
  double wins = 0;
  for (double a : id)
    for (double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

inline double quantile_lower(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  std::size_t idx = 0;
  // Largest index i with i <= q * (n - 1).
  while (idx + 1 < v.size() && static_cast<double>(idx + 1) <= q * static_cast<double>(v.size() - 1)) ++idx;
  return v[idx];
}

inline double fpr_brute(const std::vector<double>& id, const std::vector<double>& ood, double tpr) {
  const double delta = quantile_lower(id, 1.0 - tpr);
  std::size_t accepted = 0;
  for (double s : ood) accepted += s >= delta;
  return static_cast<double>(accepted) / static_cast<double>(ood.size());
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences (step h) of a scalar function of several leaf
/// tensors, compared against the autodiff gradient. Relative error uses
/// max(|analytic|, |numeric|, floor) as denominator.
inline GradCheckResult gradcheck(const std::function<mejem::Tensor(const std::vector<mejem::Tensor>&)>& f,
                                 std::vector<mejem::Tensor> inputs, double h = 1e-5, double floor = 1e-3) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  f(inputs).backward();
  GradCheckResult res;
  for (auto& t : inputs) {
    const auto analytic = t.grad();
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double fp = f(inputs).item();
      data[i] = orig - h;
      const double fm = f(inputs).item();
      data[i] = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++res.checked;
    }
  }
  return res;
}

inline mejem::Tensor random_tensor(mejem::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(mejem::shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return mejem::Tensor::from(std::move(shape), std::move(v));
}

/// Random values kept at least `gap` away from `kink` so finite differences
/// never straddle a non-differentiable point.
inline mejem::Tensor random_away_from(mejem::Shape shape, std::mt19937_64& rng, double kink, double gap = 0.05) {
  std::uniform_real_distribution<double> u(gap, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(mejem::shape_numel(shape));
  for (auto& x : v) x = kink + (sign(rng) ? 1.0 : -1.0) * u(rng);
  return mejem::Tensor::from(std::move(shape), std::move(v));
}

}  // namespace oracle
