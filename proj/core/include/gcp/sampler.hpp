#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/rng.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

enum class SamplingScheme { stratified, semi_stratified };

SamplingScheme parse_sampling_scheme(const std::string& name);
std::string to_string(SamplingScheme scheme);

/// Per-iteration gradient sampling parameters: p nonzero and q zero samples.
class SamplerConfig {
 public:
  /// Throws ConfigError unless p + q > 0 and rejection_cap >= 1.
  SamplerConfig(SamplingScheme scheme, std::size_t nonzero_samples, std::size_t zero_samples,
                SearchMode search = SearchMode::hashmap, std::size_t rejection_cap = 1000);

  SamplingScheme scheme;
  std::size_t nonzero_samples;  // p
  std::size_t zero_samples;     // q
  SearchMode search;
  std::size_t rejection_cap;

  void validate() const;
};

/// Returns `x` with its nonzero membership index built (sorted mode also
/// reorders entries lexicographically). Throws IndexError on duplicates.
SparseTensor build_nnz_index(SparseTensor x, SearchMode mode);

/// Weights folded into sampled values.
///   stratified:      nonzero N/p, zero (M-N)/q
///   semi-stratified: nonzero N/p, zero M/q (zeros are drawn from all M
///                    entries; the nonzero correction removes the stored ones)
struct SampleWeights {
  double nonzero = 0.0;
  double zero = 0.0;
};

SampleWeights sample_weights(SamplingScheme scheme, std::uint64_t nnz, std::uint64_t total,
                             std::size_t p, std::size_t q);

/// Value of one sampled gradient entry.
inline double sampled_value(SamplingScheme scheme, const SampleWeights& w, const LossFunction& loss,
                            bool is_nonzero, double x, double m) {
  if (!is_nonzero) return w.zero * loss.deriv(0.0, m);
  if (scheme == SamplingScheme::stratified) return w.nonzero * loss.deriv(x, m);
  return w.nonzero * (loss.deriv(x, m) - loss.deriv(0.0, m));
}

/// Draws the coordinates of individual sample slots. Slot s of each kind
/// owns the substream rng.fork(kind, s), so a slot's draw does not depend on
/// how many other slots exist or in which order they are visited.
class SlotDrawer {
 public:
  /// `verify_zeros` selects rejection against the nonzero index (stratified)
  /// versus unverified uniform coordinates (semi-stratified).
  SlotDrawer(const SparseTensor& x, RngStream base, bool verify_zeros, std::size_t rejection_cap);

  /// Draws stored entry uniformly; writes its coords, returns its position.
  std::size_t draw_nonzero(std::size_t slot, std::span<index_t> coords) const;

  /// Draws a zero coordinate (verified absent when `verify_zeros`). Throws
  /// SamplingError naming the slot when the rejection cap is exhausted.
  void draw_zero(std::size_t slot, std::span<index_t> coords) const;

  static RngStream slot_stream(const RngStream& base, bool is_nonzero, std::size_t slot) {
    return base.fork(stream_key({is_nonzero ? 0u : 1u, slot}));
  }

 private:
  const SparseTensor* x_;
  RngStream base_;
  bool verify_;
  std::size_t cap_;
};

/// Drawn sample coordinates and data values, before any model evaluation.
/// The two-sided distributed scheme needs these to plan communication.
struct SamplePattern {
  Dims dims;
  SamplingScheme scheme = SamplingScheme::semi_stratified;
  SampleWeights weights;
  std::size_t nonzero_samples = 0;
  std::size_t zero_samples = 0;
  std::vector<index_t> coords;  // (p+q) x d, nonzero samples first
  std::vector<double> data;     // x_i for nonzero samples, 0 for zero samples

  std::size_t size() const noexcept { return nonzero_samples + zero_samples; }
  std::span<const index_t> sample_coords(std::size_t s) const noexcept {
    return {coords.data() + s * dims.size(), dims.size()};
  }
  bool is_nonzero(std::size_t s) const noexcept { return s < nonzero_samples; }
};

/// Draws p nonzero and q zero samples from `x` (coords in x's frame).
SamplePattern draw_sample_pattern(const SparseTensor& x, const SamplerConfig& cfg, RngStream rng);

/// Evaluates a pattern against `model`. `origin` maps pattern coords into the
/// model frame (empty = identity); output coords are in the model frame.
SampledGradientTensor evaluate_pattern(const SamplePattern& pattern, const KruskalModel& model,
                                       const LossFunction& loss,
                                       std::span<const index_t> origin = {});

/// Stratified sampled gradient tensor (zeros verified by rejection).
SampledGradientTensor sample_stratified(const SparseTensor& x, const KruskalModel& model,
                                        const LossFunction& loss, const SamplerConfig& cfg,
                                        RngStream rng, std::span<const index_t> origin = {});

/// Semi-stratified sampled gradient tensor (zeros unverified, nonzero
/// samples corrected).
SampledGradientTensor sample_semi_stratified(const SparseTensor& x, const KruskalModel& model,
                                             const LossFunction& loss, const SamplerConfig& cfg,
                                             RngStream rng, std::span<const index_t> origin = {});

/// Dispatches on cfg.scheme.
SampledGradientTensor sample_gradient_tensor(const SparseTensor& x, const KruskalModel& model,
                                             const LossFunction& loss, const SamplerConfig& cfg,
                                             RngStream rng, std::span<const index_t> origin = {});

/// Fused sampling + MTTKRP: each semi-stratified sample is accumulated into
/// every mode of `out` as soon as it is drawn. Consumes the RNG exactly like
/// sample_semi_stratified, so the result equals mttkrp_all of that tensor
/// bit for bit. `out` must have the model's shape; it is overwritten.
void fused_sample_mttkrp(const SparseTensor& x, const KruskalModel& model,
                         const LossFunction& loss, const SamplerConfig& cfg, RngStream rng,
                         KruskalModel& out, std::span<const index_t> origin = {});

}  // namespace gcp
