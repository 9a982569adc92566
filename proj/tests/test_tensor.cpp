#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mejem/errors.hpp"
#include "mejem/model.hpp"
#include "mejem/tensor.hpp"
#include "oracles.hpp"

using namespace mejem;

namespace {

void expect_values(const Tensor& t, const std::vector<double>& expected, double tol = 0.0) {
  ASSERT_EQ(t.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t.data()[i], expected[i], tol) << "at " << i;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const auto eye = Tensor::matrix({{1, 0}, {0, 1}});
  const auto b = Tensor::matrix({{5, 6}, {7, 8}});
  const auto c = matmul(eye, b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  expect_values(c, {5, 6, 7, 8});
}

TEST(Matmul, RowTimesColumn) { expect_values(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})), {11}); }

TEST(Matmul, MismatchedInnerDimensionNamesBothShapes) {
  const auto a = Tensor::zeros({2, 3});
  const auto b = Tensor::zeros({4, 2});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[4x2]"), std::string::npos);
  }
}

TEST(Relu, Definition) { expect_values(relu(Tensor::vector({-1, 0, 2})), {0, 0, 2}); }

TEST(Relu, AllNegativeInputHasZeroOutputAndGradient) {
  auto x = Tensor::vector({-3, -0.5, -1e-9}, true);
  const auto y = relu(x);
  expect_values(y, {0, 0, 0});
  sum(y).backward();
  EXPECT_EQ(x.grad(), (std::vector<double>{0, 0, 0}));
}

TEST(Relu, SubgradientAtZeroIsZero) {
  auto x = Tensor::vector({0.0}, true);
  sum(relu(x)).backward();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Logsumexp, ZerosGiveLogK) { EXPECT_NEAR(logsumexp(Tensor::vector({0, 0, 0})).item(), std::log(3.0), 1e-12); }

TEST(Logsumexp, DirectEvaluation) {
  const double expected = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  EXPECT_NEAR(logsumexp(Tensor::vector({1, 2, 3})).item(), expected, 1e-12);
  EXPECT_NEAR(expected, 3.4076059, 1e-7);
}

TEST(Logsumexp, LargeConstantRowDoesNotOverflow) {
  const double v = logsumexp(Tensor::vector({1000, 1000, 1000})).item();
  ASSERT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 1000 + std::log(3.0), 1e-9);
}

TEST(Logsumexp, EmptyAxisIsDimensionError) { EXPECT_THROW(logsumexp(Tensor::zeros({3, 0})), DimensionError); }

TEST(Logsumexp, RowwiseOnMatrix) {
  const auto out = logsumexp(Tensor::matrix({{0, 0, 0}, {1, 2, 3}}));
  EXPECT_EQ(out.shape(), (Shape{2}));
  EXPECT_NEAR(out.data()[0], std::log(3.0), 1e-12);
  EXPECT_NEAR(out.data()[1], oracle::logsumexp({1, 2, 3}), 1e-12);
}

TEST(Logsumexp, ShiftIdentityHolds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::random_tensor({4, 5}, rng, -5, 5);
    const double c = shift(rng);
    const auto base = logsumexp(x);
    const auto shifted = logsumexp(add_scalar(x, c));
    for (std::size_t r = 0; r < 4; ++r) {
      EXPECT_NEAR(shifted.data()[r], base.data()[r] + c, 1e-12 * std::max(1.0, std::abs(base.data()[r] + c)));
    }
  }
}

TEST(Backward, SumOfSquaresGivesTwiceW) {
  auto w = Tensor::vector({1, 2, 3}, true);
  sum(mul(w, w)).backward();
  EXPECT_EQ(w.grad(), (std::vector<double>{2, 4, 6}));
}

TEST(Backward, IndependentLeafGetsZeroGradient) {
  auto w = Tensor::vector({1, 2, 3}, true);
  auto v = Tensor::vector({4, 5}, true);
  sum(square(v)).backward();
  EXPECT_EQ(w.grad(), (std::vector<double>{0, 0, 0}));
  EXPECT_FALSE(w.has_grad());
}

TEST(Backward, NonScalarRootIsContractError) {
  auto w = Tensor::vector({1, 2}, true);
  EXPECT_THROW(square(w).backward(), ContractError);
}

TEST(Backward, TwiceWithoutResetAccumulatesDouble) {
  std::mt19937_64 rng(11);
  auto a = oracle::random_tensor({3, 4}, rng).set_requires_grad(true);
  auto b = oracle::random_tensor({4, 2}, rng).set_requires_grad(true);
  const auto root = sum(square(relu(matmul(a, b))));
  root.backward();
  const auto once = a.grad();
  root.backward();
  const auto twice = a.grad();
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(twice[i], 2.0 * once[i]);
}

TEST(Backward, SharedSubexpressionMatchesExpandedGraph) {
  std::mt19937_64 rng(5);
  const auto xv = oracle::random_tensor({2, 3}, rng);
  const auto wv = oracle::random_tensor({3, 3}, rng);

  auto x1 = xv.clone(true);
  auto w1 = wv.clone(true);
  const auto h = matmul(x1, w1);  // reused three times
  sum(add(mul(h, h), scale(h, 3.0))).backward();

  auto x2 = xv.clone(true);
  auto w2 = wv.clone(true);
  const auto ha = matmul(x2, w2), hb = matmul(x2, w2), hc = matmul(x2, w2);
  sum(add(mul(ha, hb), scale(hc, 3.0))).backward();

  const auto g1 = x1.grad(), g2 = x2.grad();
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-12);
  const auto gw1 = w1.grad(), gw2 = w2.grad();
  for (std::size_t i = 0; i < gw1.size(); ++i) EXPECT_NEAR(gw1[i], gw2[i], 1e-12);
}

TEST(ComputationTape, InputsPrecedeTheirConsumers) {
  auto a = Tensor::vector({1, 2}, true);
  auto b = Tensor::vector({3, 4}, true);
  const auto c = mul(a, b);
  const auto root = sum(add(c, square(c)));
  ComputationTape tape(root);
  const auto& order = tape.order();
  ASSERT_EQ(order.back(), root.node().get());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& parent : order[i]->parents) {
      if (!parent->requires_grad) continue;
      const auto pos = std::find(order.begin(), order.end(), parent.get()) - order.begin();
      EXPECT_LT(static_cast<std::size_t>(pos), i);
    }
  }
  // mul, square, add, sum; each visited once despite c's fan-out.
  EXPECT_EQ(tape.op_count(), 4u);
}

TEST(Tensor, UntrackedComputationRecordsNothing) {
  const auto a = Tensor::vector({1, 2});
  const auto y = square(a);
  EXPECT_TRUE(y.is_leaf());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Tensor, ValidityCheckDetectsNonFinite) {
  EXPECT_TRUE(Tensor::vector({1, 2}).is_finite());
  EXPECT_FALSE(Tensor::vector({1, NAN}).is_finite());
  EXPECT_FALSE(Tensor::vector({INFINITY}).is_finite());
}

TEST(Tensor, FromRejectsWrongLength) { EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), DimensionError); }

// Every primitive against central finite differences at 20 random points.
class PrimitiveGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};

  void check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
             const std::function<std::vector<Tensor>()>& make_inputs) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto res = oracle::gradcheck(f, make_inputs());
      EXPECT_LT(res.max_rel_error, 1e-4) << "trial " << trial;
    }
  }

  // Weighted sum so each output element gets a distinct upstream gradient.
  Tensor weigh(const Tensor& t) {
    std::vector<double> w(t.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 + 0.25 * static_cast<double>(i % 7);
    return sum(mul(t, Tensor::from(t.shape(), w)));
  }
};

TEST_F(PrimitiveGradient, Matmul) {
  check([&](const auto& in) { return weigh(matmul(in[0], in[1])); },
        [&] { return std::vector{oracle::random_tensor({3, 4}, rng), oracle::random_tensor({4, 2}, rng)}; });
}

TEST_F(PrimitiveGradient, AddSubMul) {
  auto inputs = [&] { return std::vector{oracle::random_tensor({2, 3}, rng), oracle::random_tensor({2, 3}, rng)}; };
  check([&](const auto& in) { return weigh(add(in[0], in[1])); }, inputs);
  check([&](const auto& in) { return weigh(sub(in[0], in[1])); }, inputs);
  check([&](const auto& in) { return weigh(mul(in[0], in[1])); }, inputs);
}

TEST_F(PrimitiveGradient, AddBias) {
  check([&](const auto& in) { return weigh(add_bias(in[0], in[1])); },
        [&] { return std::vector{oracle::random_tensor({4, 3}, rng), oracle::random_tensor({3}, rng)}; });
}

TEST_F(PrimitiveGradient, ScaleNegSquare) {
  auto inputs = [&] { return std::vector{oracle::random_tensor({5}, rng, -2, 2)}; };
  check([&](const auto& in) { return weigh(scale(in[0], -1.7)); }, inputs);
  check([&](const auto& in) { return weigh(neg(in[0])); }, inputs);
  check([&](const auto& in) { return weigh(square(in[0])); }, inputs);
  check([&](const auto& in) { return weigh(add_scalar(in[0], 0.3)); }, inputs);
}

TEST_F(PrimitiveGradient, ReluAwayFromKink) {
  check([&](const auto& in) { return weigh(relu(in[0])); },
        [&] { return std::vector{oracle::random_away_from({6}, rng, 0.0)}; });
}

TEST_F(PrimitiveGradient, HingeAwayFromKink) {
  check([&](const auto& in) { return weigh(hinge(in[0], 0.4)); },
        [&] { return std::vector{oracle::random_away_from({6}, rng, 0.4)}; });
}

TEST_F(PrimitiveGradient, LogsumexpRowSumGather) {
  auto inputs = [&] { return std::vector{oracle::random_tensor({3, 4}, rng, -3, 3)}; };
  check([&](const auto& in) { return weigh(logsumexp(in[0])); }, inputs);
  check([&](const auto& in) { return weigh(row_sum(in[0])); }, inputs);
  const std::vector<int> idx{2, 0, 3};
  check([&](const auto& in) { return weigh(gather(in[0], idx)); }, inputs);
}

TEST_F(PrimitiveGradient, SumMean) {
  auto inputs = [&] { return std::vector{oracle::random_tensor({2, 5}, rng)}; };
  check([&](const auto& in) { return sum(square(in[0])); }, inputs);
  check([&](const auto& in) { return mean(square(in[0])); }, inputs);
}

TEST(Gradient, TwoLayerMlpScalarLossMatchesFiniteDifferences) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = oracle::random_tensor({6, 3}, rng, -2, 2);
    const auto res = oracle::gradcheck(
        [&](const std::vector<Tensor>& in) {
          const auto h = relu(add_bias(matmul(x, in[0]), in[1]));
          return mean(logsumexp(add_bias(matmul(h, in[2]), in[3])));
        },
        {oracle::random_tensor({3, 8}, rng), oracle::random_tensor({8}, rng), oracle::random_tensor({8, 4}, rng),
         oracle::random_tensor({4}, rng)});
    EXPECT_LT(res.max_rel_error, 1e-4);
  }
}
