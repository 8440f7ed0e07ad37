#pragma once

#include <cstdint>
#include <optional>

#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/rng.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

/// Low-rank count or real data with a known generating model.
struct SyntheticSpec {
  Dims dims;
  index_t rank = 5;
  LossKind loss = LossKind::poisson;
  std::uint64_t seed = 0;
  double density = 0.01;         // target fraction of stored entries, in (0, 1]
  double boost = 10.0;           // multiplier for boosted factor entries
  double boost_fraction = 0.1;   // probability that a factor entry is boosted
  double noise_sd = 1.0;         // Gaussian noise level
  /// Fixed factor values instead of uniform draws (boosting still applies).
  std::optional<double> constant_factors;
  /// Skip the density calibration and keep the raw factor scale.
  bool calibrate = true;

  void validate() const;
};

struct SyntheticData {
  SparseTensor tensor;
  KruskalModel truth;
};

/// Largest tensor the generator will enumerate densely.
inline constexpr std::uint64_t kSyntheticEntryLimit = 50'000'000;

/// Factors are uniform on [0, 1) with a random fraction multiplied by
/// `boost`. Poisson: the model is rescaled (equally across modes) so the
/// expected fraction of nonzero counts equals `density`, then each entry is
/// a Poisson draw with the model value as its mean. Gaussian: each entry is
/// kept with probability `density` and set to its model value plus
/// N(0, noise_sd^2) noise. Zeros are not stored. Throws ConfigError when the
/// density cannot be reached or the tensor is too large to enumerate.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Poisson draw with mean `mean` (inversion for small means, PTRS otherwise).
std::uint64_t poisson_draw(RngStream& rng, double mean);

}  // namespace gcp
