#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gcp/error.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/mttkrp.hpp"
#include "gcp/sampler.hpp"
#include "gcp/sparse_tensor.hpp"
#include "oracles.hpp"

using namespace gcp;

namespace {

KruskalModel rank1_model() {
  KruskalModel m({2, 2, 2}, 1);
  m.factor(0)(0, 0) = 1;
  m.factor(0)(1, 0) = 2;
  m.factor(1)(0, 0) = 3;
  m.factor(1)(1, 0) = 4;
  m.factor(2)(0, 0) = 5;
  m.factor(2)(1, 0) = 6;
  return m;
}

}  // namespace

TEST(ModelEntry, AllOnesSumsRank) {
  KruskalModel m({3, 4, 2}, 2, 1.0);
  EXPECT_EQ(model_entry(m, std::vector<index_t>{2, 3, 1}), 2.0);
}

TEST(ModelEntry, RankOneHandExpansion) {
  EXPECT_EQ(model_entry(rank1_model(), std::vector<index_t>{1, 0, 1}), 36.0);
}

TEST(ModelEntry, ZeroRowAnnihilates) {
  auto m = random_model({3, 3, 3}, 3, RngStream(1, 1), 0.5, 1.5);
  for (index_t r = 0; r < 3; ++r) m.factor(1)(2, r) = 0.0;
  for (index_t i = 0; i < 3; ++i)
    for (index_t k = 0; k < 3; ++k) EXPECT_EQ(m.entry(std::vector<index_t>{i, 2, k}), 0.0);
}

TEST(ModelEntry, OutOfRangeThrows) {
  KruskalModel m({2, 2}, 1, 1.0);
  EXPECT_THROW(m.entry(std::vector<index_t>{2, 0}), IndexError);
  EXPECT_THROW(m.entry(std::vector<index_t>{0}), IndexError);
}

TEST(ModelEntry, SelectorFactorsReproduceCoefficients) {
  // Mode 0 random, every other factor a single standard basis column.
  const Dims dims{4, 3, 2};
  auto base = random_model(dims, 3, RngStream(7, 0));
  for (index_t r = 0; r < 3; ++r) {
    KruskalModel m = base;
    for (std::size_t k = 1; k < dims.size(); ++k)
      for (index_t i = 0; i < dims[k]; ++i)
        for (index_t c = 0; c < 3; ++c) m.factor(k)(i, c) = (c == r) ? 1.0 : 0.0;
    for (index_t i = 0; i < dims[0]; ++i)
      EXPECT_EQ(m.entry(std::vector<index_t>{i, 1, 1}), base.factor(0)(i, r));
  }
}

TEST(KruskalModel, ViewsTileContiguousStorage) {
  KruskalModel m({4, 3, 5, 2}, 3);
  std::size_t expected = 0;
  for (std::size_t k = 0; k < m.ndims(); ++k) {
    EXPECT_EQ(m.offset(k), expected);
    expected += m.dims()[k] * m.rank();
  }
  EXPECT_EQ(expected, m.size());
  for (std::size_t k = 0; k < m.ndims(); ++k) {
    const index_t i = m.dims()[k] - 1;
    m.factor(k)(i, 2) = 100.0 + static_cast<double>(k);
    EXPECT_EQ(m.data()[m.offset(k) + i * m.rank() + 2], 100.0 + static_cast<double>(k));
  }
}

TEST(KruskalModel, RejectsZeroRankAndFlagsNonFinite) {
  EXPECT_THROW(KruskalModel({2, 2}, 0), ShapeError);
  KruskalModel m({2, 2}, 1, 1.0);
  m.check_finite();
  m.factor(1)(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(m.check_finite(), NumericError);
}

TEST(KruskalModel, ExtractBlockCopiesRows) {
  auto m = random_model({5, 4, 3}, 2, RngStream(3, 3));
  const std::vector<index_t> origin{1, 2, 0};
  auto b = extract_block(m, origin, {3, 2, 3});
  for (std::size_t k = 0; k < 3; ++k)
    for (index_t i = 0; i < b.dims()[k]; ++i)
      for (index_t r = 0; r < 2; ++r) EXPECT_EQ(b.factor(k)(i, r), m.factor(k)(i + origin[k], r));
}

TEST(SparseTensor, ValidatesCoordinatesAndValues) {
  SparseTensor x({2, 3});
  EXPECT_THROW(x.push_back(std::vector<index_t>{2, 0}, 1.0), IndexError);
  EXPECT_THROW(x.push_back(std::vector<index_t>{0, 0}, std::nan("")), NumericError);
  EXPECT_THROW(x.push_back(std::vector<index_t>{0}, 1.0), IndexError);
  x.push_back(std::vector<index_t>{1, 2}, 4.0);
  EXPECT_EQ(x.nnz(), 1u);
  EXPECT_EQ(x.total_entries(), 6u);
}

TEST(SparseTensor, TotalEntriesOverflowIsDetected) {
  const index_t big = index_t{1} << 32;
  EXPECT_THROW(total_entries({big, big, 2}), ShapeError);
  EXPECT_THROW(total_entries({3, 0}), ShapeError);
}

TEST(SparseTensor, SortedIndexOrdersEntriesAndRejectsDuplicates) {
  auto x = oracle::random_sparse({6, 5, 4}, 0.3, RngStream(5, 5));
  SparseTensor shuffled(x.dims());
  for (std::size_t e = x.nnz(); e-- > 0;) shuffled.push_back(x.coords(e), x.value(e));
  shuffled.build_index(SearchMode::sorted);
  for (std::size_t e = 1; e < shuffled.nnz(); ++e)
    EXPECT_LT(shuffled.linear_index(shuffled.coords(e - 1)), shuffled.linear_index(shuffled.coords(e)));
  SparseTensor dup({2, 2});
  dup.push_back(std::vector<index_t>{1, 1}, 1.0);
  dup.push_back(std::vector<index_t>{1, 1}, 2.0);
  EXPECT_THROW(dup.build_index(SearchMode::sorted), IndexError);
  EXPECT_THROW(dup.build_index(SearchMode::hashmap), IndexError);
}

TEST(SparseTensor, MembershipSortedAndHashAgree) {
  const auto x = oracle::random_sparse({20, 15, 10}, 0.1, RngStream(11, 0));
  auto sorted = build_nnz_index(x, SearchMode::sorted);
  auto hashed = build_nnz_index(x, SearchMode::hashmap);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    EXPECT_TRUE(sorted.contains(x.coords(e)));
    EXPECT_TRUE(hashed.contains(x.coords(e)));
  }
  RngStream rng(12, 0);
  std::size_t hits = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<index_t> c{rng.below(20), rng.below(15), rng.below(10)};
    const bool a = sorted.contains(c);
    ASSERT_EQ(a, hashed.contains(c));
    if (a) {
      ++hits;
      EXPECT_EQ(sorted.value(*sorted.find(c)), hashed.value(*hashed.find(c)));
    }
  }
  EXPECT_GT(hits, 0u);
}

TEST(SparseTensor, KnownAbsentCoordinateIsNotFound) {
  SparseTensor x({3, 3});
  x.push_back(std::vector<index_t>{0, 0}, 1.0);
  x.push_back(std::vector<index_t>{2, 1}, 2.0);
  for (auto mode : {SearchMode::sorted, SearchMode::hashmap}) {
    auto y = build_nnz_index(x, mode);
    EXPECT_FALSE(y.contains(std::vector<index_t>{1, 1}));
    EXPECT_TRUE(y.contains(std::vector<index_t>{2, 1}));
  }
}

TEST(Mttkrp, SingleEntry) {
  SparseTensor x({3, 3, 3});
  x.push_back(std::vector<index_t>{0, 0, 0}, 2.0);
  KruskalModel m({3, 3, 3}, 1, 1.0);
  auto g = mttkrp(x, m, 1);
  EXPECT_EQ(g.factor(1)(0, 0), 2.0);
  EXPECT_EQ(g.factor(1)(1, 0), 0.0);
  EXPECT_EQ(g.factor(1)(2, 0), 0.0);
}

TEST(Mttkrp, EmptyTensorGivesZero) {
  SparseTensor x({3, 2, 2});
  auto m = random_model(x.dims(), 2, RngStream(1, 2));
  auto g = mttkrp_all(x, m);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(Mttkrp, ModeOutOfRangeThrows) {
  SparseTensor x({3, 2, 2});
  auto m = random_model(x.dims(), 2, RngStream(1, 2));
  EXPECT_THROW(mttkrp(x, m, 3), IndexError);
  KruskalModel other({3, 2, 3}, 2);
  EXPECT_THROW(mttkrp(x, other, 0), ShapeError);
}

class MttkrpBruteForce : public ::testing::TestWithParam<Dims> {};

TEST_P(MttkrpBruteForce, MatchesUnfoldingTimesKhatriRao) {
  const Dims dims = GetParam();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = oracle::random_sparse(dims, 0.5, RngStream(seed, 1), -2.0, 2.0);
    const auto m = random_model(dims, 2, RngStream(seed, 2), -1.0, 1.0);
    const auto dense = oracle::densify(x);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto g = mttkrp(x, m, k);
      const auto ref = oracle::unfolding_times_khatri_rao(dense, dims, m, k);
      const auto got = g.factor(k).data();
      const double scale = std::max(1.0, oracle::frobenius(ref));
      EXPECT_LE(oracle::max_abs_diff(got, ref), 1e-12 * scale) << "mode " << k;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, MttkrpBruteForce,
                         ::testing::Values(Dims{4, 3, 2}, Dims{3, 3, 3, 2}, Dims{5, 1, 4}));

TEST(Mttkrp, AccumulationFollowsEntryOrder) {
  const auto x = oracle::random_sparse({4, 3, 2}, 0.6, RngStream(9, 9));
  const auto m = random_model(x.dims(), 3, RngStream(9, 10));
  EXPECT_EQ(mttkrp_all(x, m), mttkrp_all(x, m));
}

TEST(DenseGradientOracle, ZeroAtGaussianOptimum) {
  const Dims dims{3, 4, 2};
  const auto truth = random_model(dims, 2, RngStream(4, 4), 0.5, 1.5);
  const auto x = oracle::sparse_from_dense(oracle::densify(truth), dims);
  const auto g = dense_gradient_oracle(x, truth, LossFunction::gaussian());
  for (double v : g.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(DenseGradientOracle, MatchesFiniteDifferences) {
  const Dims dims{3, 3, 3};
  for (auto loss : {LossFunction::gaussian(), LossFunction::poisson()}) {
    const auto x = loss.kind == LossKind::poisson ? oracle::random_counts(dims, 0.4, RngStream(2, 2))
                                                  : oracle::random_sparse(dims, 0.4, RngStream(2, 2));
    const auto m = random_model(dims, 2, RngStream(3, 3), 0.5, 1.5);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto g = dense_gradient_oracle(x, m, loss, k);
      const auto fd = oracle::finite_difference_gradient(x, m, loss, k);
      const auto got = g.factor(k).data();
      for (std::size_t i = 0; i < fd.size(); ++i)
        EXPECT_NEAR(got[i], fd[i], 1e-5 * std::max(1.0, std::abs(fd[i]))) << to_string(loss.kind);
    }
  }
}

TEST(DenseGradientOracle, AllZeroTensorMatchesDirectEnumeration) {
  const Dims dims{2, 3, 2};
  const SparseTensor x(dims);
  const auto m = random_model(dims, 2, RngStream(8, 8), -1.0, 1.0);
  const auto loss = LossFunction::gaussian();
  const auto model_dense = oracle::densify(m);
  std::vector<double> y(model_dense.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 2.0 * model_dense[i];
  for (std::size_t k = 0; k < 3; ++k) {
    const auto ref = oracle::unfolding_times_khatri_rao(y, dims, m, k);
    const auto g = dense_gradient_oracle(x, m, loss, k);
    EXPECT_LE(oracle::max_abs_diff(g.factor(k).data(), ref), 1e-12);
  }
}

TEST(DenseGradientOracle, RefusesLargeTensors) {
  SparseTensor x({200, 100, 100});
  KruskalModel m(x.dims(), 1, 1.0);
  EXPECT_THROW(dense_gradient_oracle(x, m, LossFunction::gaussian(), 0), ConfigError);
}

TEST(KruskalModel, TotalMatchesDenseSum) {
  const Dims dims{4, 3, 2};
  auto m = random_model(dims, 3, RngStream(8, 1));
  const auto dense = oracle::densify(m);
  double sum = 0.0;
  for (double v : dense) sum += v;
  EXPECT_NEAR(model_total(m), sum, 1e-12 * sum);
  scale_to_total(m, 10.0);
  EXPECT_NEAR(model_total(m), 10.0, 1e-12);
  KruskalModel zero(dims, 2);
  EXPECT_THROW(scale_to_total(zero, 1.0), NumericError);
  EXPECT_THROW(scale_to_total(m, -1.0), NumericError);
}
