#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "gcp/adam.hpp"
#include "gcp/grid.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/ledger.hpp"
#include "gcp/loss.hpp"
#include "gcp/rng.hpp"
#include "gcp/sampler.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

/// How factor matrices are distributed across workers.
///   all_reduce: each worker keeps its block's factor rows, replicated across
///               the slice of workers sharing that block; gradients are
///               summed densely over each slice.
///   two_sided:  every factor row has a single owner; workers import the rows
///               their samples touch and export partial gradient rows.
enum class DistributionScheme { all_reduce, two_sided };

DistributionScheme parse_distribution_scheme(const std::string& name);
std::string to_string(DistributionScheme scheme);

/// How gradient samples are addressed.
///   per_worker:   each worker draws its share of p and q from its own block
///                 with its own stream and block-local weights.
///   global_slots: every worker replays the global sample slots and keeps
///                 those inside its block, so the union of all workers'
///                 samples is independent of the worker count.
enum class SampleAddressing { per_worker, global_slots };

SampleAddressing parse_sample_addressing(const std::string& name);
std::string to_string(SampleAddressing addressing);

/// Order in which worker phases run. Results must not depend on it.
enum class ExecutionPolicy { forward, reverse, threaded };

ExecutionPolicy parse_execution_policy(const std::string& name);

/// Stream purposes. Gradient samples of iteration t on worker w use
/// RngStream(seed, stream_key({gradient, t, w})).
namespace stream_purpose {
inline constexpr std::uint64_t gradient = 1;
inline constexpr std::uint64_t objective = 2;
inline constexpr std::uint64_t init = 3;
}  // namespace stream_purpose

inline RngStream gradient_stream(std::uint64_t seed, std::uint64_t iter, std::size_t worker) {
  return RngStream(seed, stream_key({stream_purpose::gradient, iter, worker}));
}
inline RngStream objective_stream(std::uint64_t seed, std::size_t worker) {
  return RngStream(seed, stream_key({stream_purpose::objective, worker}));
}

struct ClusterOptions {
  DistributionScheme scheme = DistributionScheme::all_reduce;
  SampleAddressing addressing = SampleAddressing::per_worker;
  ExecutionPolicy execution = ExecutionPolicy::forward;
  bool fused = false;

  /// Throws ConfigError for fused sampling with stratified sampling or with
  /// the two-sided scheme.
  void validate(const SamplerConfig& sampler) const;
};

/// Simulated synchronous GCP-Adam cluster on a processor grid. Every
/// cross-worker exchange passes through an in-process message bus and is
/// counted in the communication ledger.
class Cluster {
 public:
  /// `x` is copied; a nonzero index is built with sampler.search if absent.
  Cluster(const SparseTensor& x, const KruskalModel& model0, const LossFunction& loss,
          const SamplerConfig& sampler, const AdamParams& adam, const ProcessorGrid& grid,
          const ClusterOptions& options, std::uint64_t seed);
  ~Cluster();
  Cluster(Cluster&&) noexcept;
  Cluster& operator=(Cluster&&) noexcept;

  std::size_t workers() const noexcept;
  const ProcessorGrid& grid() const noexcept;
  const ClusterOptions& options() const noexcept;
  const SparseTensor& tensor() const noexcept;

  /// Draws the samples of iteration `iter`, performs the scheme's gradient
  /// exchange and returns the reduced gradient in global model shape. The
  /// model is not changed.
  KruskalModel gradient(std::uint64_t iter);

  /// gradient(iter) followed by the Adam step on every worker.
  void iterate(std::uint64_t iter);

  /// Global model assembled from the authoritative rows.
  KruskalModel model() const;

  /// Objective estimate of the assembled model with fnz/fz samples drawn
  /// from a stream that is the same on every call.
  double estimate_loss(std::size_t fnz, std::size_t fz) const;

  void checkpoint();
  /// Restores models and moments from the checkpoint; the rate is kept.
  void restore();
  double rate() const noexcept;
  void scale_rate(double factor);

  const CommLedger& ledger() const noexcept;
  CommLedger& ledger() noexcept;

  /// Worker-local factor storage (block shaped).
  const KruskalModel& worker_model(std::size_t worker) const;
  const AdamState& worker_adam(std::size_t worker) const;

  /// Global rows [first, second) of `mode` owned by `worker` under two-sided.
  std::pair<index_t, index_t> owned_rows(std::size_t worker, std::size_t mode) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gcp
