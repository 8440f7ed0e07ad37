#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gcp/error.hpp"
#include "gcp/loss.hpp"
#include "gcp/sampler.hpp"
#include "oracles.hpp"

using namespace gcp;

TEST(LossValue, Examples) {
  const auto g = LossFunction::gaussian();
  const auto p = LossFunction::poisson(1e-10);
  EXPECT_EQ(loss_value(2.5, 2.5, g), 0.0);
  EXPECT_EQ(loss_value(1.0, 3.0, g), 4.0);
  EXPECT_EQ(loss_value(0.0, 3.0, p), 3.0);
  EXPECT_NEAR(loss_value(2.0, 1.0, p), 1.0 - 2.0 * std::log(1.0 + 1e-10), 1e-15);
}

TEST(LossDeriv, Examples) {
  const auto g = LossFunction::gaussian();
  EXPECT_EQ(loss_deriv(1.5, 1.5, g), 0.0);
  EXPECT_NEAR(loss_deriv(2.0, 1.0, LossFunction::poisson(0.0)), -1.0, 0.0);
  EXPECT_NEAR(loss_deriv(2.0, 1.0, LossFunction::poisson()), -1.0, 1e-9);
}

TEST(LossDeriv, MatchesFiniteDifferences) {
  RngStream rng(21, 0);
  for (auto loss : {LossFunction::gaussian(), LossFunction::poisson()}) {
    for (int t = 0; t < 20; ++t) {
      const double x = loss.kind == LossKind::poisson ? static_cast<double>(rng.below(6)) : rng.uniform(-3, 3);
      const double m = loss.kind == LossKind::poisson ? rng.uniform(0.2, 5.0) : rng.uniform(-3, 3);
      const double h = 1e-6;
      const double fd = (loss.value(x, m + h) - loss.value(x, m - h)) / (2 * h);
      EXPECT_NEAR(loss.deriv(x, m), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(LossFunction, RejectsNonFiniteAndInvalidPoissonModel) {
  const auto p = LossFunction::poisson();
  EXPECT_THROW(p.value(1.0, -1.0), NumericError);
  EXPECT_THROW(p.deriv(1.0, std::numeric_limits<double>::infinity()), NumericError);
  EXPECT_THROW(LossFunction::gaussian().value(std::nan(""), 0.0), NumericError);
  EXPECT_NO_THROW(p.value(2.0, 0.0));
  EXPECT_EQ(p.lower_bound, 0.0);
  EXPECT_TRUE(std::isinf(LossFunction::gaussian().lower_bound));
}

TEST(LossFunction, PoissonIsUnimodalAroundData) {
  const auto p = LossFunction::poisson();
  for (double x : {1.0, 3.0, 7.0}) {
    double prev = p.value(x, 0.05);
    for (double m = 0.1; m < x; m += 0.05) {
      const double v = p.value(x, m);
      EXPECT_LT(v, prev);
      prev = v;
    }
    prev = p.value(x, x);
    for (double m = x + 0.05; m < 3 * x; m += 0.05) {
      const double v = p.value(x, m);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(LossKind, ParsesNames) {
  EXPECT_EQ(parse_loss_kind("poisson"), LossKind::poisson);
  EXPECT_EQ(parse_loss_kind("gaussian"), LossKind::gaussian);
  EXPECT_THROW(parse_loss_kind("bernoulli"), ConfigError);
}

TEST(FullLoss, ZeroAtGaussianOptimum) {
  const Dims dims{3, 2, 4};
  const auto m = random_model(dims, 2, RngStream(1, 0), 0.1, 1.0);
  const auto x = oracle::sparse_from_dense(oracle::densify(m), dims);
  EXPECT_NEAR(full_loss(x, m, LossFunction::gaussian()), 0.0, 1e-20);
}

TEST(FullLoss, PoissonAllZeroTensor) {
  SparseTensor x({2, 2, 2});
  KruskalModel m(x.dims(), 1, 1.0);
  EXPECT_DOUBLE_EQ(full_loss(x, m, LossFunction::poisson()), 8.0);
}

TEST(FullLoss, RefusesLargeTensorsAndMismatchedModels) {
  SparseTensor big({101, 100, 100});
  EXPECT_THROW(full_loss(big, KruskalModel(big.dims(), 1), LossFunction::gaussian()), ConfigError);
  SparseTensor x({2, 2});
  EXPECT_THROW(full_loss(x, KruskalModel({2, 3}, 1), LossFunction::gaussian()), ShapeError);
}

TEST(ExactLoss, AgreesWithEnumeration) {
  for (auto loss : {LossFunction::gaussian(), LossFunction::poisson()}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const Dims dims{5, 4, 3};
      const auto x = oracle::random_counts(dims, 0.3, RngStream(seed, 1));
      const auto m = random_model(dims, 3, RngStream(seed, 2), 0.1, 1.0);
      const double full = full_loss(x, m, loss);
      EXPECT_NEAR(exact_loss(x, m, loss), full, 1e-10 * std::abs(full));
    }
  }
}

namespace {

struct LossFixture {
  SparseTensor x;
  KruskalModel m;
  LossFunction loss = LossFunction::poisson();
};

LossFixture poisson_fixture() {
  const Dims dims{5, 4, 3};
  auto x = build_nnz_index(oracle::random_counts(dims, 0.3, RngStream(77, 1)), SearchMode::hashmap);
  return {x, random_model(dims, 3, RngStream(77, 2), 0.2, 1.0)};
}

}  // namespace

TEST(EstimatedLoss, UnbiasedAndStandardErrorShrinks) {
  const auto f = poisson_fixture();
  const double truth = full_loss(f.x, f.m, f.loss);
  auto run = [&](std::size_t trials) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double v = estimated_loss(f.x, f.m, f.loss, 5, 5, RngStream(3, t));
      sum += v;
      sq += v * v;
    }
    const double mean = sum / trials;
    const double var = sq / trials - mean * mean;
    return std::pair{mean, std::sqrt(var / trials)};
  };
  const auto [mean, se] = run(10000);
  EXPECT_LT(std::abs(mean - truth), 0.02 * std::abs(truth));
  const auto [mean_small, se_small] = run(100);
  (void)mean_small;
  EXPECT_NEAR(se_small / se, 10.0, 2.5);
}

TEST(EstimatedLoss, NonzeroPartUnbiased) {
  const auto f = poisson_fixture();
  double nonzero_sum = 0.0;
  for (std::size_t e = 0; e < f.x.nnz(); ++e) nonzero_sum += f.loss.value(f.x.value(e), f.m.entry(f.x.coords(e)));
  double total = 0.0;
  const std::size_t trials = 10000;
  for (std::size_t t = 0; t < trials; ++t)
    total += estimated_loss(f.x, f.m, f.loss, f.x.nnz(), 0, RngStream(4, t));
  EXPECT_LT(std::abs(total / trials - nonzero_sum), 0.02 * std::abs(nonzero_sum));
}

TEST(EstimatedLoss, ZeroAtGaussianOptimum) {
  const Dims dims{4, 3, 3};
  auto m = random_model(dims, 2, RngStream(5, 0), 0.1, 1.0);
  for (index_t r = 0; r < 2; ++r) m.factor(0)(3, r) = 0.0;  // a slice of true zeros
  auto x = build_nnz_index(oracle::sparse_from_dense(oracle::densify(m), dims), SearchMode::sorted);
  for (std::uint64_t s = 0; s < 10; ++s)
    EXPECT_NEAR(estimated_loss(x, m, LossFunction::gaussian(), 7, 7, RngStream(s, 0)), 0.0, 1e-20);
}

TEST(EstimatedLoss, DenseTensorNonzeroOnly) {
  const Dims dims{2, 2, 2};
  const auto x = build_nnz_index(oracle::random_sparse(dims, 1.1, RngStream(6, 0)), SearchMode::sorted);
  ASSERT_EQ(x.nnz(), 8u);
  const auto m = random_model(dims, 1, RngStream(6, 1));
  const auto g = LossFunction::gaussian();
  EXPECT_THROW(estimated_loss(x, m, g, 4, 1, RngStream(0, 0)), SamplingError);
  double sum = 0.0;
  const std::size_t trials = 20000;
  for (std::size_t t = 0; t < trials; ++t) sum += estimated_loss(x, m, g, 4, 0, RngStream(1, t));
  const double full = full_loss(x, m, g);
  EXPECT_LT(std::abs(sum / trials - full), 0.02 * full);
}

TEST(EstimatedLoss, ErrorsOnImpossibleSamples) {
  SparseTensor empty({3, 3});
  empty.build_index(SearchMode::hashmap);
  KruskalModel m(empty.dims(), 1, 1.0);
  EXPECT_THROW(estimated_loss(empty, m, LossFunction::gaussian(), 1, 1, RngStream(0, 0)), SamplingError);
  EXPECT_NO_THROW(estimated_loss(empty, m, LossFunction::gaussian(), 0, 1, RngStream(0, 0)));
}

TEST(EstimatedLoss, DeterministicPerStream) {
  const auto f = poisson_fixture();
  EXPECT_EQ(estimated_loss(f.x, f.m, f.loss, 9, 9, RngStream(1, 1)),
            estimated_loss(f.x, f.m, f.loss, 9, 9, RngStream(1, 1)));
  EXPECT_NE(estimated_loss(f.x, f.m, f.loss, 9, 9, RngStream(1, 1)),
            estimated_loss(f.x, f.m, f.loss, 9, 9, RngStream(1, 2)));
}
