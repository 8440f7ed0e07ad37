#include "gcp/sampler.hpp"

#include <algorithm>

#include "gcp/error.hpp"
#include "gcp/mttkrp.hpp"

namespace gcp {

SamplingScheme parse_sampling_scheme(const std::string& name) {
  if (name == "stratified") return SamplingScheme::stratified;
  if (name == "semi-stratified" || name == "semi_stratified") return SamplingScheme::semi_stratified;
  throw ConfigError("unknown sampling scheme '" + name + "' (expected stratified|semi-stratified)");
}

std::string to_string(SamplingScheme scheme) {
  return scheme == SamplingScheme::stratified ? "stratified" : "semi-stratified";
}

SamplerConfig::SamplerConfig(SamplingScheme scheme_, std::size_t p, std::size_t q,
                             SearchMode search_, std::size_t cap)
    : scheme(scheme_), nonzero_samples(p), zero_samples(q), search(search_), rejection_cap(cap) {
  validate();
}

void SamplerConfig::validate() const {
  if (nonzero_samples + zero_samples == 0)
    throw ConfigError("sampler needs at least one nonzero or zero sample per iteration");
  if (rejection_cap < 1) throw ConfigError("rejection cap must be at least 1");
}

SparseTensor build_nnz_index(SparseTensor x, SearchMode mode) {
  x.build_index(mode);
  return x;
}

SampleWeights sample_weights(SamplingScheme scheme, std::uint64_t nnz, std::uint64_t total,
                             std::size_t p, std::size_t q) {
  SampleWeights w;
  if (p > 0) w.nonzero = static_cast<double>(nnz) / static_cast<double>(p);
  if (q > 0) {
    const std::uint64_t pool = scheme == SamplingScheme::stratified ? total - nnz : total;
    w.zero = static_cast<double>(pool) / static_cast<double>(q);
  }
  return w;
}

SlotDrawer::SlotDrawer(const SparseTensor& x, RngStream base, bool verify_zeros,
                       std::size_t rejection_cap)
    : x_(&x), base_(base), verify_(verify_zeros), cap_(rejection_cap) {
  if (verify_ && x.index_mode() == SearchMode::none)
    throw ConfigError("zero-sample verification requires a nonzero index (build_nnz_index)");
}

std::size_t SlotDrawer::draw_nonzero(std::size_t slot, std::span<index_t> coords) const {
  if (x_->nnz() == 0)
    throw SamplingError("cannot draw nonzero samples from a tensor with no nonzeros", slot);
  auto rng = slot_stream(base_, true, slot);
  const auto e = static_cast<std::size_t>(rng.below(x_->nnz()));
  const auto c = x_->coords(e);
  std::copy(c.begin(), c.end(), coords.begin());
  return e;
}

void SlotDrawer::draw_zero(std::size_t slot, std::span<index_t> coords) const {
  auto rng = slot_stream(base_, false, slot);
  const auto& dims = x_->dims();
  for (std::size_t attempt = 0; attempt < cap_; ++attempt) {
    for (std::size_t k = 0; k < dims.size(); ++k) coords[k] = rng.below(dims[k]);
    if (!verify_ || !x_->contains(coords)) return;
  }
  throw SamplingError("zero sample slot " + std::to_string(slot) + " found no zero entry in " +
                          std::to_string(cap_) + " attempts",
                      slot);
}

namespace {

void check_drawable(const SparseTensor& x, const SamplerConfig& cfg) {
  cfg.validate();
  if (cfg.nonzero_samples > 0 && x.nnz() == 0)
    throw SamplingError("cannot draw nonzero samples from a tensor with no nonzeros", 0);
  if (cfg.scheme == SamplingScheme::stratified && cfg.zero_samples > 0 &&
      x.nnz() == x.total_entries())
    throw SamplingError("tensor has no zero entries to sample", 0);
}

SamplerConfig with_scheme(SamplerConfig cfg, SamplingScheme scheme) {
  cfg.scheme = scheme;
  return cfg;
}

template <class Visit>
void for_each_sample(const SparseTensor& x, const SamplerConfig& cfg, RngStream rng, Visit&& visit) {
  check_drawable(x, cfg);
  const SlotDrawer drawer(x, rng, cfg.scheme == SamplingScheme::stratified && cfg.zero_samples > 0,
                          cfg.rejection_cap);
  std::vector<index_t> c(x.ndims());
  for (std::size_t s = 0; s < cfg.nonzero_samples; ++s) {
    const auto e = drawer.draw_nonzero(s, c);
    visit(std::span<const index_t>(c), true, x.value(e));
  }
  for (std::size_t s = 0; s < cfg.zero_samples; ++s) {
    drawer.draw_zero(s, c);
    visit(std::span<const index_t>(c), false, 0.0);
  }
}

Dims model_frame(const KruskalModel& model, const Dims& dims, std::span<const index_t> origin) {
  if (origin.empty()) {
    if (!model.conforms(dims))
      throw ShapeError("tensor dims " + to_string(dims) + " do not match model dims " +
                       to_string(model.dims()));
  } else {
    if (origin.size() != dims.size() || model.ndims() != dims.size())
      throw ShapeError("origin does not match tensor order");
    for (std::size_t k = 0; k < dims.size(); ++k)
      if (origin[k] + dims[k] > model.dims()[k]) throw ShapeError("tensor block exceeds model bounds");
  }
  return model.dims();
}

void to_model_frame(std::span<const index_t> c, std::span<const index_t> origin,
                    std::span<index_t> out) {
  for (std::size_t k = 0; k < c.size(); ++k) out[k] = origin.empty() ? c[k] : c[k] + origin[k];
}

}  // namespace

SamplePattern draw_sample_pattern(const SparseTensor& x, const SamplerConfig& cfg, RngStream rng) {
  SamplePattern pattern;
  pattern.dims = x.dims();
  pattern.scheme = cfg.scheme;
  pattern.nonzero_samples = cfg.nonzero_samples;
  pattern.zero_samples = cfg.zero_samples;
  pattern.weights =
      sample_weights(cfg.scheme, x.nnz(), x.total_entries(), cfg.nonzero_samples, cfg.zero_samples);
  pattern.coords.reserve(pattern.size() * x.ndims());
  pattern.data.reserve(pattern.size());
  for_each_sample(x, cfg, rng, [&](std::span<const index_t> c, bool, double value) {
    pattern.coords.insert(pattern.coords.end(), c.begin(), c.end());
    pattern.data.push_back(value);
  });
  return pattern;
}

SampledGradientTensor evaluate_pattern(const SamplePattern& pattern, const KruskalModel& model,
                                       const LossFunction& loss, std::span<const index_t> origin) {
  SampledGradientTensor out(model_frame(model, pattern.dims, origin), pattern.nonzero_samples,
                            pattern.zero_samples);
  std::vector<index_t> mc(pattern.dims.size());
  for (std::size_t s = 0; s < pattern.size(); ++s) {
    const auto c = pattern.sample_coords(s);
    const double m = model.entry_unchecked(c, origin);
    to_model_frame(c, origin, mc);
    out.push_back(mc, sampled_value(pattern.scheme, pattern.weights, loss, pattern.is_nonzero(s),
                                    pattern.data[s], m));
  }
  return out;
}

SampledGradientTensor sample_gradient_tensor(const SparseTensor& x, const KruskalModel& model,
                                             const LossFunction& loss, const SamplerConfig& cfg,
                                             RngStream rng, std::span<const index_t> origin) {
  SampledGradientTensor out(model_frame(model, x.dims(), origin), cfg.nonzero_samples,
                            cfg.zero_samples);
  const auto w =
      sample_weights(cfg.scheme, x.nnz(), x.total_entries(), cfg.nonzero_samples, cfg.zero_samples);
  std::vector<index_t> mc(x.ndims());
  for_each_sample(x, cfg, rng, [&](std::span<const index_t> c, bool nonzero, double value) {
    const double m = model.entry_unchecked(c, origin);
    to_model_frame(c, origin, mc);
    out.push_back(mc, sampled_value(cfg.scheme, w, loss, nonzero, value, m));
  });
  if (out.nnz() != cfg.nonzero_samples + cfg.zero_samples)
    throw InternalError("sampled tensor has the wrong entry count");
  return out;
}

SampledGradientTensor sample_stratified(const SparseTensor& x, const KruskalModel& model,
                                        const LossFunction& loss, const SamplerConfig& cfg,
                                        RngStream rng, std::span<const index_t> origin) {
  return sample_gradient_tensor(x, model, loss, with_scheme(cfg, SamplingScheme::stratified), rng,
                                origin);
}

SampledGradientTensor sample_semi_stratified(const SparseTensor& x, const KruskalModel& model,
                                             const LossFunction& loss, const SamplerConfig& cfg,
                                             RngStream rng, std::span<const index_t> origin) {
  return sample_gradient_tensor(x, model, loss, with_scheme(cfg, SamplingScheme::semi_stratified),
                                rng, origin);
}

void fused_sample_mttkrp(const SparseTensor& x, const KruskalModel& model,
                         const LossFunction& loss, const SamplerConfig& cfg, RngStream rng,
                         KruskalModel& out, std::span<const index_t> origin) {
  if (cfg.scheme != SamplingScheme::semi_stratified)
    throw ConfigError("fused sampling-MTTKRP supports only semi-stratified sampling");
  model_frame(model, x.dims(), origin);
  if (out.dims() != model.dims() || out.rank() != model.rank())
    throw ShapeError("fused MTTKRP output does not match the model shape");
  out.fill(0.0);
  const auto w =
      sample_weights(cfg.scheme, x.nnz(), x.total_entries(), cfg.nonzero_samples, cfg.zero_samples);
  const std::size_t d = x.ndims();
  for_each_sample(x, cfg, rng, [&](std::span<const index_t> c, bool nonzero, double value) {
    const double y = sampled_value(cfg.scheme, w, loss, nonzero, value, model.entry_unchecked(c, origin));
    for (std::size_t k = 0; k < d; ++k) {
      const index_t row = origin.empty() ? c[k] : c[k] + origin[k];
      accumulate_mttkrp_row(model, c, origin, y, k, out.factor(k).row(row).data());
    }
  });
}

}  // namespace gcp
