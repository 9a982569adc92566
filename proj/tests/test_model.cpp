#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mejem/errors.hpp"
#include "mejem/model.hpp"
#include "oracles.hpp"

using namespace mejem;

TEST(InitMlp, SameSeedGivesBitwiseIdenticalParameters) {
  const auto a = init_mlp({2, 8, 3}, 7);
  const auto b = init_mlp({2, 8, 3}, 7);
  const auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa[i].shape(), pb[i].shape());
    for (std::size_t j = 0; j < pa[i].numel(); ++j) EXPECT_EQ(pa[i].data()[j], pb[i].data()[j]);
  }
}

TEST(InitMlp, DifferentSeedsDiffer) {
  const auto a = init_mlp({2, 8, 3}, 7);
  const auto b = init_mlp({2, 8, 3}, 8);
  EXPECT_NE(a.weights[0].data()[0], b.weights[0].data()[0]);
}

TEST(InitMlp, BiasesStartAtZero) {
  const auto p = init_mlp({2, 8, 3}, 7);
  for (const auto& b : p.biases)
    for (double v : b.data()) EXPECT_EQ(v, 0.0);
}

TEST(InitMlp, ShapesAndParameterCount) {
  const auto p = init_mlp({2, 128, 128, 3}, 1);
  ASSERT_EQ(p.num_layers(), 3u);
  EXPECT_EQ(p.weights[0].shape(), (Shape{2, 128}));
  EXPECT_EQ(p.weights[2].shape(), (Shape{128, 3}));
  EXPECT_EQ(p.biases[1].shape(), (Shape{128}));
  EXPECT_EQ(p.parameter_count(), 2u * 128 + 128 + 128 * 128 + 128 + 128 * 3 + 3);
  for (const auto& t : p.parameters()) EXPECT_TRUE(t.requires_grad());
}

TEST(InitMlp, WeightVarianceIsTwoOverFanIn) {
  const std::size_t fan_in = 100;
  const auto p = init_mlp({fan_in, 100}, 3);  // 10k draws
  const auto w = p.weights[0].data();
  double m = 0;
  for (double v : w) m += v;
  m /= static_cast<double>(w.size());
  double var = 0;
  for (double v : w) var += (v - m) * (v - m);
  var /= static_cast<double>(w.size() - 1);
  const double expected = 2.0 / static_cast<double>(fan_in);
  EXPECT_NEAR(var, expected, 0.2 * expected);
}

TEST(InitMlp, InvalidSizesAreRejected) {
  EXPECT_THROW(init_mlp({2}, 0), ConfigError);
  EXPECT_THROW(init_mlp({2, 0, 3}, 0), ConfigError);
}

TEST(Forward, ZeroInputZeroBiasGivesZeroLogits) {
  const auto p = init_mlp({4, 3}, 1);
  const auto logits = forward(p, Tensor::zeros({5, 4}));
  EXPECT_EQ(logits.shape(), (Shape{5, 3}));
  for (double v : logits.data()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, SingleLayerOnOnesSumsWeightColumns) {
  auto p = init_mlp({2, 3}, 1);
  p.weights[0] = Tensor::matrix({{1, 2, 3}, {4, 5, 6}}, true);
  const auto logits = forward(p, Tensor::matrix({{1, 1}}));
  EXPECT_EQ(logits.data()[0], 5.0);
  EXPECT_EQ(logits.data()[1], 7.0);
  EXPECT_EQ(logits.data()[2], 9.0);
}

TEST(Forward, WrongInputWidthIsDimensionError) {
  const auto p = init_mlp({2, 4, 3}, 1);
  EXPECT_THROW(forward(p, Tensor::zeros({1, 3})), DimensionError);
}

TEST(Forward, InputGradientMatchesFiniteDifferences) {
  const auto p = init_mlp({3, 16, 16, 4}, 5).frozen();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(4);
    for (auto& v : w) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto weights = Tensor::from({1, 4}, w);
    const auto res = oracle::gradcheck(
        [&](const std::vector<Tensor>& in) { return sum(mul(forward(p, in[0]), weights)); },
        {oracle::random_tensor({1, 3}, rng, -2, 2)});
    EXPECT_LT(res.max_rel_error, 1e-4);
  }
}

TEST(Forward, ParameterGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  const auto x = oracle::random_tensor({5, 2}, rng, -2, 2);
  auto p = init_mlp({2, 6, 3}, 9);
  const auto res = oracle::gradcheck(
      [&](const std::vector<Tensor>& in) {
        ModelParams q = p;
        q.weights = {in[0], in[2]};
        q.biases = {in[1], in[3]};
        return mean(marginal_energy(forward(q, x)));
      },
      {p.weights[0].clone(), oracle::random_tensor({6}, rng, -0.5, 0.5), p.weights[1].clone(),
       oracle::random_tensor({3}, rng)});
  EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(MarginalEnergy, Examples) {
  EXPECT_NEAR(marginal_energy(Tensor::matrix({{0, 0, 0}})).item(), -std::log(3.0), 1e-12);
  EXPECT_NEAR(marginal_energy(Tensor::matrix({{1, 2, 3}})).item(), -3.4076059, 1e-7);
}

TEST(MarginalEnergy, ShiftMovesEnergyByMinusC) {
  std::mt19937_64 rng(1);
  const auto logits = oracle::random_tensor({4, 3}, rng, -3, 3);
  const auto e0 = marginal_energy(logits);
  const auto e1 = marginal_energy(add_scalar(logits, 2.5));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e1.data()[i], e0.data()[i] - 2.5, 1e-12);
}

TEST(JointEnergy, NegatedGatheredLogit) {
  const std::vector<int> y{2, 0};
  const auto e = joint_energy(Tensor::matrix({{1, 2, 3}, {4, 5, 6}}), y);
  EXPECT_EQ(e.data()[0], -3.0);
  EXPECT_EQ(e.data()[1], -4.0);
}

TEST(JointEnergy, LabelOutOfRangeIsRejected) {
  const std::vector<int> y{3};
  EXPECT_THROW(joint_energy(Tensor::matrix({{1, 2, 3}}), y), DimensionError);
}

TEST(ClassPosteriors, UniformLogitsGiveOneOverK) {
  const auto p = class_posteriors(Tensor::matrix({{2, 2, 2, 2}}));
  for (double v : p.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(ClassPosteriors, ConfidentRow) {
  const auto p = class_posteriors(Tensor::matrix({{10, 0, 0}}));
  EXPECT_NEAR(p.data()[0], 0.999909, 1e-6);
  EXPECT_NEAR(p.data()[1], 0.0000454, 1e-7);
  EXPECT_NEAR(p.data()[2], 0.0000454, 1e-7);
  const auto ref = oracle::softmax({10, 0, 0});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.data()[i], ref[i], 1e-15);
}

TEST(ClassPosteriors, ShiftInvariantAndNormalized) {
  std::mt19937_64 rng(4);
  const auto logits = oracle::random_tensor({6, 5}, rng, -4, 4);
  const auto p0 = class_posteriors(logits);
  const auto p1 = class_posteriors(add_scalar(logits, 123.0));
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_NEAR(p0.at(r, c), p1.at(r, c), 1e-12);
      s += p0.at(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(ReadEnergies, JointRequiresLabels) {
  const auto p = init_mlp({2, 4, 3}, 1);
  const auto x = Tensor::matrix({{0.5, -0.5}});
  EXPECT_FALSE(read_energies(p, x).joint_energy.has_value());
  const std::vector<int> y{1};
  const auto r = read_energies(p, x, std::span<const int>(y));
  ASSERT_TRUE(r.joint_energy.has_value());
  EXPECT_EQ(r.joint_energy->item(), -r.logits.at(0, 1));
  // Joint energies bound the marginal energy from above.
  EXPECT_LE(r.marginal_energy.item(), r.joint_energy->item());
}

TEST(ModelEnergy, DoesNotTouchParameterGradients) {
  auto p = init_mlp({2, 4, 3}, 1);
  auto x = Tensor::matrix({{0.5, -0.5}}, true);
  sum(model_energy(p)(x)).backward();
  EXPECT_TRUE(x.has_grad());
  for (const auto& t : p.parameters()) EXPECT_FALSE(t.has_grad());
}
