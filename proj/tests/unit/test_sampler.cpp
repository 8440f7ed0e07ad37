#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gcp/error.hpp"
#include "gcp/loss.hpp"
#include "gcp/mttkrp.hpp"
#include "gcp/sampler.hpp"
#include "oracles.hpp"

using namespace gcp;

namespace {

struct Fixture {
  SparseTensor x;
  KruskalModel m;
  LossFunction loss;
};

Fixture poisson_543() {
  const Dims dims{5, 4, 3};
  return {build_nnz_index(oracle::random_counts(dims, 0.3, RngStream(1234, 1)), SearchMode::hashmap),
          random_model(dims, 3, RngStream(1234, 2), 0.2, 1.0), LossFunction::poisson()};
}

KruskalModel mean_sampled_gradient(const Fixture& f, const SamplerConfig& cfg, std::size_t trials,
                                   std::uint64_t seed) {
  KruskalModel sum(f.m.dims(), f.m.rank());
  for (std::size_t t = 0; t < trials; ++t) {
    const auto y = sample_gradient_tensor(f.x, f.m, f.loss, cfg, RngStream(seed, t));
    const auto g = mttkrp_all(y, f.m);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += g.data()[i];
  }
  for (auto& v : sum.data()) v /= static_cast<double>(trials);
  return sum;
}

double relative_error(ConstFactorView a, ConstFactorView b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    num += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
    den += b.data()[i] * b.data()[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(SamplerConfig, Validation) {
  EXPECT_THROW(SamplerConfig(SamplingScheme::stratified, 0, 0), ConfigError);
  EXPECT_THROW(SamplerConfig(SamplingScheme::stratified, 1, 0, SearchMode::hashmap, 0), ConfigError);
  EXPECT_NO_THROW(SamplerConfig(SamplingScheme::semi_stratified, 0, 1));
  EXPECT_EQ(parse_sampling_scheme("semi-stratified"), SamplingScheme::semi_stratified);
  EXPECT_THROW(parse_sampling_scheme("uniform"), ConfigError);
}

TEST(SampleWeights, StratifiedAndSemiStratified) {
  const auto s = sample_weights(SamplingScheme::stratified, 10, 60, 5, 25);
  EXPECT_EQ(s.nonzero, 2.0);
  EXPECT_EQ(s.zero, 2.0);
  const auto ss = sample_weights(SamplingScheme::semi_stratified, 10, 60, 5, 20);
  EXPECT_EQ(ss.nonzero, 2.0);
  EXPECT_EQ(ss.zero, 3.0);
}

TEST(Stratified, ExactEntryCountAndVerifiedZeros) {
  const auto f = poisson_543();
  const SamplerConfig cfg(SamplingScheme::stratified, 40, 60);
  const auto y = sample_stratified(f.x, f.m, f.loss, cfg, RngStream(5, 5));
  ASSERT_EQ(y.nnz(), 100u);
  EXPECT_EQ(y.nonzero_samples(), 40u);
  for (std::size_t e = 0; e < 40; ++e) EXPECT_TRUE(f.x.contains(y.coords(e)));
  for (std::size_t e = 40; e < 100; ++e) EXPECT_FALSE(f.x.contains(y.coords(e)));
}

TEST(Stratified, DuplicatesCarryEqualValues) {
  const auto f = poisson_543();
  const auto y = sample_stratified(f.x, f.m, f.loss, SamplerConfig(SamplingScheme::stratified, 200, 0),
                                   RngStream(6, 6));
  for (std::size_t a = 0; a < y.nnz(); ++a)
    for (std::size_t b = a + 1; b < y.nnz(); ++b)
      if (std::equal(y.coords(a).begin(), y.coords(a).end(), y.coords(b).begin()))
        EXPECT_EQ(y.value(a), y.value(b));
}

TEST(Stratified, NonzeroSelectionIsUniform) {
  const auto f = poisson_543();
  const std::size_t n = f.x.nnz();
  const SlotDrawer drawer(f.x, RngStream(8, 8), false, 1);
  const std::size_t per = 1000;
  std::vector<double> counts(n, 0.0);
  std::vector<index_t> c(3);
  for (std::size_t s = 0; s < n * per; ++s) counts[drawer.draw_nonzero(s, c)] += 1.0;
  double chi2 = 0.0;
  for (double k : counts) chi2 += (k - per) * (k - per) / per;
  // 99.9% quantile of chi-square with n-1 degrees of freedom (Wilson-Hilferty).
  const double df = static_cast<double>(n - 1);
  const double z = 3.09;
  const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
  EXPECT_LT(chi2, crit);
}

TEST(Stratified, ZerosOnFullTensorIsAnError) {
  const Dims dims{2, 2, 2};
  auto x = build_nnz_index(oracle::random_sparse(dims, 2.0, RngStream(0, 0)), SearchMode::sorted);
  const auto m = random_model(dims, 1, RngStream(0, 1));
  EXPECT_THROW(sample_stratified(x, m, LossFunction::gaussian(),
                                 SamplerConfig(SamplingScheme::stratified, 1, 1), RngStream(0, 0)),
               SamplingError);
}

TEST(Stratified, NoNonzerosIsAnError) {
  SparseTensor x({3, 3});
  x.build_index(SearchMode::hashmap);
  KruskalModel m(x.dims(), 1, 1.0);
  EXPECT_THROW(sample_stratified(x, m, LossFunction::gaussian(),
                                 SamplerConfig(SamplingScheme::stratified, 1, 1), RngStream(0, 0)),
               SamplingError);
}

TEST(Stratified, RejectionCapNamesFailingSlot) {
  SparseTensor x({2, 2});
  x.push_back(std::vector<index_t>{0, 0}, 1.0);
  x.push_back(std::vector<index_t>{0, 1}, 1.0);
  x.push_back(std::vector<index_t>{1, 0}, 1.0);
  x.build_index(SearchMode::sorted);
  KruskalModel m(x.dims(), 1, 1.0);
  try {
    sample_stratified(x, m, LossFunction::gaussian(),
                      SamplerConfig(SamplingScheme::stratified, 0, 64, SearchMode::sorted, 1),
                      RngStream(1, 1));
    FAIL() << "expected SamplingError";
  } catch (const SamplingError& e) {
    EXPECT_LT(e.slot(), 64u);
    EXPECT_NE(std::string(e.what()).find("slot " + std::to_string(e.slot())), std::string::npos);
  }
}

TEST(Stratified, ZeroGradientAtGaussianOptimum) {
  const Dims dims{4, 3, 3};
  auto m = random_model(dims, 2, RngStream(2, 0), 0.1, 1.0);
  for (index_t r = 0; r < 2; ++r) m.factor(1)(0, r) = 0.0;
  const auto x = build_nnz_index(oracle::sparse_from_dense(oracle::densify(m), dims), SearchMode::hashmap);
  const auto y = sample_stratified(x, m, LossFunction::gaussian(),
                                   SamplerConfig(SamplingScheme::stratified, 10, 10), RngStream(3, 0));
  for (double v : y.values()) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(SemiStratified, CorrectionCancelsWhenModelIsZero) {
  const auto f = poisson_543();
  KruskalModel zero(f.x.dims(), 2);
  // Gaussian at m = 0: nonzero value w (2(0 - x) - 2(0 - 0)) = -2 w x, zero value 0.
  const auto y = sample_semi_stratified(f.x, zero, LossFunction::gaussian(),
                                        SamplerConfig(SamplingScheme::semi_stratified, 30, 30),
                                        RngStream(4, 4));
  const double w = static_cast<double>(f.x.nnz()) / 30.0;
  for (std::size_t e = 0; e < 30; ++e) {
    const auto pos = f.x.find(y.coords(e));
    ASSERT_TRUE(pos);
    EXPECT_DOUBLE_EQ(y.value(e), -2.0 * w * f.x.value(*pos));
  }
  for (std::size_t e = 30; e < 60; ++e) EXPECT_EQ(y.value(e), 0.0);
}

TEST(SemiStratified, CorrectionVanishesWhenDerivativesMatch) {
  const auto g = LossFunction::gaussian();
  const SampleWeights w{3.0, 5.0};
  EXPECT_EQ(sampled_value(SamplingScheme::semi_stratified, w, g, true, 0.0, 1.7), 0.0);
  EXPECT_EQ(sampled_value(SamplingScheme::semi_stratified, w, g, false, 0.0, 1.7), 5.0 * 2.0 * 1.7);
}

TEST(SemiStratified, NoIndexNeeded) {
  const auto x = oracle::random_counts({4, 4, 4}, 0.2, RngStream(9, 0));
  const auto m = random_model(x.dims(), 2, RngStream(9, 1), 0.1, 1.0);
  EXPECT_NO_THROW(sample_semi_stratified(x, m, LossFunction::poisson(),
                                         SamplerConfig(SamplingScheme::semi_stratified, 5, 5),
                                         RngStream(0, 0)));
  EXPECT_THROW(sample_stratified(x, m, LossFunction::poisson(),
                                 SamplerConfig(SamplingScheme::stratified, 5, 5), RngStream(0, 0)),
               ConfigError);
}

TEST(SemiStratified, DeterministicForSameStream) {
  const auto f = poisson_543();
  const SamplerConfig cfg(SamplingScheme::semi_stratified, 17, 23);
  EXPECT_EQ(sample_semi_stratified(f.x, f.m, f.loss, cfg, RngStream(1, 2)),
            sample_semi_stratified(f.x, f.m, f.loss, cfg, RngStream(1, 2)));
  EXPECT_FALSE(sample_semi_stratified(f.x, f.m, f.loss, cfg, RngStream(1, 2)) ==
               sample_semi_stratified(f.x, f.m, f.loss, cfg, RngStream(1, 3)));
}

TEST(SlotDrawer, SlotDrawsAreIndependentOfCounts) {
  const auto f = poisson_543();
  const auto a = sample_semi_stratified(f.x, f.m, f.loss, SamplerConfig(SamplingScheme::semi_stratified, 5, 7),
                                        RngStream(3, 3));
  const auto b = sample_semi_stratified(f.x, f.m, f.loss, SamplerConfig(SamplingScheme::semi_stratified, 9, 4),
                                        RngStream(3, 3));
  for (std::size_t e = 0; e < 5; ++e)
    EXPECT_TRUE(std::equal(a.coords(e).begin(), a.coords(e).end(), b.coords(e).begin()));
  for (std::size_t s = 0; s < 4; ++s)
    EXPECT_TRUE(std::equal(a.coords(5 + s).begin(), a.coords(5 + s).end(), b.coords(9 + s).begin()));
}

TEST(Unbiasedness, StratifiedMatchesDenseGradient) {
  const auto f = poisson_543();
  const auto oracle_g = dense_gradient_oracle(f.x, f.m, f.loss);
  const auto mean = mean_sampled_gradient(f, SamplerConfig(SamplingScheme::stratified, 40, 40), 10000, 31);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(relative_error(mean.factor(k), oracle_g.factor(k)), 0.02);
}

TEST(Unbiasedness, SemiStratifiedMatchesDenseGradient) {
  const auto f = poisson_543();
  const auto oracle_g = dense_gradient_oracle(f.x, f.m, f.loss);
  const auto mean =
      mean_sampled_gradient(f, SamplerConfig(SamplingScheme::semi_stratified, 40, 40), 10000, 32);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(relative_error(mean.factor(k), oracle_g.factor(k)), 0.02);
}

TEST(Unbiasedness, SchemesAgreeWithEachOther) {
  const auto f = poisson_543();
  const auto a = mean_sampled_gradient(f, SamplerConfig(SamplingScheme::stratified, 40, 40), 10000, 41);
  const auto b = mean_sampled_gradient(f, SamplerConfig(SamplingScheme::semi_stratified, 40, 40), 10000, 42);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(relative_error(a.factor(k), b.factor(k)), 0.03);
}

TEST(Fused, EqualsSampleThenMttkrpBitForBit) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream shape(seed, 100);
    const Dims dims{2 + shape.below(5), 2 + shape.below(4), 1 + shape.below(4), 1 + shape.below(2)};
    const auto x = oracle::random_counts(dims, 0.3, RngStream(seed, 1));
    if (x.nnz() == 0) continue;
    const auto m = random_model(dims, 1 + seed % 4, RngStream(seed, 2), 0.1, 1.0);
    const auto loss = seed % 2 ? LossFunction::poisson() : LossFunction::gaussian();
    const SamplerConfig cfg(SamplingScheme::semi_stratified, 3 + seed, 2 * seed);
    const auto y = sample_semi_stratified(x, m, loss, cfg, RngStream(seed, 3));
    const auto expected = mttkrp_all(y, m);
    KruskalModel fused(dims, m.rank(), 42.0);
    fused_sample_mttkrp(x, m, loss, cfg, RngStream(seed, 3), fused);
    EXPECT_EQ(fused, expected) << "fixture " << seed;
  }
}

TEST(Fused, RequiresSemiStratified) {
  const auto f = poisson_543();
  KruskalModel out(f.m.dims(), f.m.rank());
  EXPECT_THROW(fused_sample_mttkrp(f.x, f.m, f.loss, SamplerConfig(SamplingScheme::stratified, 1, 1),
                                   RngStream(0, 0), out),
               ConfigError);
}

TEST(Fused, SingleNonzeroClosedForm) {
  SparseTensor x({3, 4, 2});
  x.push_back(std::vector<index_t>{1, 2, 0}, 3.0);
  const auto m = random_model(x.dims(), 2, RngStream(5, 5), 0.5, 1.5);
  KruskalModel out(x.dims(), 2);
  fused_sample_mttkrp(x, m, LossFunction::gaussian(), SamplerConfig(SamplingScheme::semi_stratified, 1, 0),
                      RngStream(0, 0), out);
  // y = (N/p) (2(m - 3) - 2m) = -6
  const index_t c[3] = {1, 2, 0};
  for (std::size_t k = 0; k < 3; ++k)
    for (index_t r = 0; r < 2; ++r) {
      double prod = -6.0;
      for (std::size_t j = 0; j < 3; ++j)
        if (j != k) prod *= m.factor(j)(c[j], r);
      for (index_t i = 0; i < x.dims()[k]; ++i)
        EXPECT_DOUBLE_EQ(out.factor(k)(i, r), i == c[k] ? prod : 0.0);
    }
}
