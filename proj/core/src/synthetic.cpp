#include "gcp/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "gcp/error.hpp"

namespace gcp {

namespace {
constexpr std::uint64_t kFactorStream = 21;
constexpr std::uint64_t kDataStream = 22;
}  // namespace

void SyntheticSpec::validate() const {
  if (dims.empty()) throw ConfigError("synthetic tensor needs at least one mode");
  (void)total_entries(dims);
  if (rank == 0) throw ConfigError("synthetic rank must be positive");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must lie in (0, 1]");
  if (!(boost >= 1.0)) throw ConfigError("boost factor must be at least 1");
  if (!(boost_fraction >= 0.0 && boost_fraction <= 1.0))
    throw ConfigError("boost fraction must lie in [0, 1]");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise level must be nonnegative");
}

std::uint64_t poisson_draw(RngStream& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw NumericError("invalid Poisson mean");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  // Hormann's transformed rejection with squeeze.
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * log_mean - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

namespace {

/// Dense model values in lexicographic order.
std::vector<double> dense_values(const KruskalModel& model) {
  const auto& dims = model.dims();
  std::vector<double> out(total_entries(dims));
  std::vector<index_t> c(dims.size(), 0);
  for (auto& v : out) {
    v = model.entry_unchecked(c);
    for (std::size_t k = dims.size(); k-- > 0;) {
      if (++c[k] < dims[k]) break;
      c[k] = 0;
    }
  }
  return out;
}

double expected_density(const std::vector<double>& m, double scale) {
  double sum = 0.0;
  for (double v : m) sum += -std::expm1(-scale * v);
  return sum / static_cast<double>(m.size());
}

/// Scale c with mean over entries of 1 - exp(-c m) equal to `density`.
double calibrate_scale(const std::vector<double>& m, double density) {
  double positive = 0.0;
  for (double v : m) positive += v > 0.0 ? 1.0 : 0.0;
  if (density >= positive / static_cast<double>(m.size()))
    throw ConfigError("density " + std::to_string(density) +
                      " is unreachable for Poisson data from this model");
  double lo = 0.0;
  double hi = 1.0;
  while (expected_density(m, hi) < density) {
    hi *= 2.0;
    if (hi > 1e300) throw ConfigError("density calibration failed to bracket the target");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected_density(m, mid) < density ? lo : hi) = mid;
    if (hi - lo <= 1e-12 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto total = total_entries(spec.dims);
  if (total > kSyntheticEntryLimit)
    throw ConfigError("synthetic generation enumerates all " + std::to_string(total) +
                      " entries; the limit is " + std::to_string(kSyntheticEntryLimit));

  RngStream frng(spec.seed, kFactorStream);
  KruskalModel truth(spec.dims, spec.rank);
  for (auto& v : truth.data()) {
    v = spec.constant_factors ? *spec.constant_factors : frng.uniform();
    if (spec.boost_fraction > 0.0 && frng.uniform() < spec.boost_fraction) v *= spec.boost;
  }

  auto m = dense_values(truth);
  if (spec.loss == LossKind::poisson && spec.calibrate) {
    const double c = calibrate_scale(m, spec.density);
    const double per_mode = std::pow(c, 1.0 / static_cast<double>(spec.dims.size()));
    for (auto& v : truth.data()) v *= per_mode;
    m = dense_values(truth);
  }

  SyntheticData out{SparseTensor(spec.dims), truth};
  RngStream drng(spec.seed, kDataStream);
  std::vector<index_t> c(spec.dims.size(), 0);
  for (std::uint64_t lin = 0; lin < total; ++lin) {
    double value = 0.0;
    if (spec.loss == LossKind::poisson) {
      value = static_cast<double>(poisson_draw(drng, m[lin]));
    } else if (spec.density >= 1.0 || drng.uniform() < spec.density) {
      value = m[lin] + (spec.noise_sd > 0.0 ? spec.noise_sd * drng.normal() : 0.0);
    }
    if (value != 0.0) out.tensor.push_back(c, value);
    for (std::size_t k = spec.dims.size(); k-- > 0;) {
      if (++c[k] < spec.dims[k]) break;
      c[k] = 0;
    }
  }
  return out;
}

}  // namespace gcp
