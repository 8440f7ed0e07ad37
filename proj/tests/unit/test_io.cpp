#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "gcp/error.hpp"
#include "gcp/frostt.hpp"
#include "gcp/loss.hpp"
#include "gcp/model_io.hpp"
#include "gcp/synthetic.hpp"
#include "oracles.hpp"

using namespace gcp;

namespace {

SparseTensor parse(const std::string& text, const std::optional<Dims>& dims = std::nullopt) {
  std::istringstream in(text);
  return parse_frostt(in, dims);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gcp_test_" + name);
}

}  // namespace

TEST(Frostt, ConvertsToZeroBased) {
  const auto x = parse("1 1 1 2.0\n");
  ASSERT_EQ(x.nnz(), 1u);
  EXPECT_EQ(x.dims(), (Dims{1, 1, 1}));
  EXPECT_EQ(x.coords(0)[0], 0u);
  EXPECT_EQ(x.value(0), 2.0);
}

TEST(Frostt, CommentsBlankLinesAndDimsInference) {
  const auto x = parse("# header\n\n3 1 2 1.5\n  1 4 1   -2\n");
  EXPECT_EQ(x.dims(), (Dims{3, 4, 2}));
  EXPECT_EQ(x.nnz(), 2u);
}

TEST(Frostt, DimsOverride) {
  const auto x = parse("1 2 3.0\n", Dims{5, 6});
  EXPECT_EQ(x.dims(), (Dims{5, 6}));
  EXPECT_THROW(parse("1 7 3.0\n", Dims{5, 6}), ParseError);
  EXPECT_THROW(parse("1 2 3.0\n", Dims{5, 6, 7}), ParseError);
}

TEST(Frostt, ErrorsNameTheLine) {
  EXPECT_EQ(error_line("1 1 1 2.0\n1 1 1 3.0\n"), 2u);
  EXPECT_EQ(error_line("1 1 1 2.0\n0 1 1 3.0\n"), 2u);
  EXPECT_EQ(error_line("1 1 1 2.0\n2 1 3.0\n"), 2u);
  EXPECT_EQ(error_line("1 1 1 2.0\n2 1 1 nan\n"), 2u);
  EXPECT_EQ(error_line("# c\n1 x 1 2.0\n"), 2u);
  EXPECT_EQ(error_line("1 1 1 0\n"), 1u);
  EXPECT_EQ(error_line("1 1 1 2.0 7\n2 2 2 1\n"), 1u);
}

TEST(Frostt, EmptyInputNeedsDims) {
  EXPECT_THROW(parse("# nothing\n"), ParseError);
  EXPECT_EQ(parse("", Dims{2, 2}).nnz(), 0u);
}

TEST(Frostt, MissingFileIsIoError) {
  EXPECT_THROW(load_frostt("/nonexistent/tensor.tns"), IoError);
}

TEST(Frostt, RoundTrip) {
  const auto x = oracle::random_sparse({7, 5, 3, 2}, 0.3, RngStream(1, 1), -5.0, 5.0);
  const auto path = temp_file("roundtrip.tns");
  save_frostt(path.string(), x);
  EXPECT_EQ(load_frostt(path.string(), x.dims()), x);
  std::filesystem::remove(path);
}

TEST(Frostt, ParseDims) {
  EXPECT_EQ(parse_dims("300x200x100"), (Dims{300, 200, 100}));
  EXPECT_EQ(parse_dims("4,3"), (Dims{4, 3}));
  EXPECT_THROW(parse_dims("4x0"), ConfigError);
  EXPECT_THROW(parse_dims("ax3"), ConfigError);
  EXPECT_THROW(parse_dims(""), ConfigError);
}

TEST(ModelIo, RoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = random_model({4, 3, 6}, 1 + seed, RngStream(seed, 0), -1e3, 1e3);
    m.data()[0] = 1.0 / 3.0;
    m.data()[1] = 5e-324;
    std::stringstream ss;
    write_model(ss, m);
    EXPECT_EQ(read_model(ss), m);
  }
}

TEST(ModelIo, FileRoundTripPreservesLoss) {
  const auto x = oracle::random_counts({5, 4, 3}, 0.3, RngStream(2, 0));
  const auto m = random_model(x.dims(), 2, RngStream(2, 1), 0.1, 2.0);
  const auto path = temp_file("model.txt");
  save_model(path.string(), m);
  const auto loaded = load_model(path.string());
  EXPECT_EQ(full_loss(x, loaded, LossFunction::poisson()), full_loss(x, m, LossFunction::poisson()));
  std::filesystem::remove(path);
}

TEST(ModelIo, RejectsMalformedInput) {
  const auto m = random_model({2, 2}, 1, RngStream(3, 0));
  std::stringstream ss;
  write_model(ss, m);
  const std::string good = ss.str();
  auto read = [](const std::string& s) {
    std::istringstream in(s);
    return read_model(in);
  };
  EXPECT_THROW(read("tensor 2\n2 2\n1\n"), ParseError);
  EXPECT_THROW(read(good.substr(0, good.find_last_of(" \n", good.size() - 2) + 1)), ParseError);
  EXPECT_THROW(read(good + "1.0\n"), ParseError);
  EXPECT_THROW(read("kruskal 2\n2 2\n0\n"), ParseError);
  EXPECT_THROW(load_model("/nonexistent/model.txt"), IoError);
}

TEST(Synthetic, ConstantFactorsGivePoissonMeanCd) {
  SyntheticSpec spec;
  spec.dims = {25, 20, 20};
  spec.rank = 1;
  spec.boost = 1.0;
  spec.constant_factors = 1.2;
  spec.calibrate = false;
  spec.seed = 4;
  const auto data = generate_synthetic(spec);
  double sum = 0.0;
  for (double v : data.tensor.values()) sum += v;
  const double mean = sum / static_cast<double>(data.tensor.total_entries());
  EXPECT_NEAR(mean, std::pow(1.2, 3), 0.05);
  EXPECT_EQ(data.truth.data()[0], 1.2);
}

TEST(Synthetic, NoiselessGaussianEqualsModel) {
  SyntheticSpec spec;
  spec.dims = {6, 5, 4};
  spec.rank = 3;
  spec.loss = LossKind::gaussian;
  spec.density = 1.0;
  spec.noise_sd = 0.0;
  const auto data = generate_synthetic(spec);
  ASSERT_EQ(data.tensor.nnz(), data.tensor.total_entries());
  for (std::size_t e = 0; e < data.tensor.nnz(); ++e)
    EXPECT_EQ(data.tensor.value(e), data.truth.entry(data.tensor.coords(e)));
}

TEST(Synthetic, DeterministicAndDensityCalibrated) {
  SyntheticSpec spec;
  spec.dims = {40, 30, 20};
  spec.rank = 5;
  spec.density = 0.05;
  spec.seed = 8;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.tensor, b.tensor);
  EXPECT_EQ(a.truth, b.truth);
  const double observed = static_cast<double>(a.tensor.nnz()) / static_cast<double>(a.tensor.total_entries());
  EXPECT_NEAR(observed, 0.05, 0.01);
  for (double v : a.tensor.values()) EXPECT_EQ(v, std::floor(v));
}

TEST(Synthetic, LargeCountFixtureHasAbout59kNonzeros) {
  SyntheticSpec spec;
  spec.dims = {300, 200, 100};
  spec.rank = 5;
  spec.density = 59000.0 / 6e6;
  spec.seed = 1;
  const auto data = generate_synthetic(spec);
  EXPECT_NEAR(static_cast<double>(data.tensor.nnz()), 59000.0, 59000.0 * 0.05);
}

TEST(Synthetic, Validation) {
  SyntheticSpec spec;
  spec.dims = {3, 3};
  spec.density = 0.0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec.density = 0.5;
  spec.rank = 0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec.rank = 1;
  spec.dims = {1000, 1000, 100};
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec.dims = {3, 3};
  spec.density = 1.0;  // Poisson cannot make every count nonzero
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(PoissonDraw, MeanAndVarianceForSmallAndLargeMeans) {
  for (double mu : {0.3, 4.0, 45.0, 400.0}) {
    RngStream rng(9, static_cast<std::uint64_t>(mu * 10));
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(poisson_draw(rng, mu));
      s += k;
      s2 += k * k;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, mu, 5 * std::sqrt(mu / n));
    EXPECT_NEAR(var / mu, 1.0, 0.05);
  }
}
