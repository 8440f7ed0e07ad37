#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "gcp/adam.hpp"
#include "gcp/annealing.hpp"
#include "gcp/grid.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/sampler.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

enum class FederatedMethod { local_sgd, fedadam };

FederatedMethod parse_federated_method(const std::string& name);
std::string to_string(FederatedMethod method);

struct FederatedConfig {
  FederatedMethod method = FederatedMethod::fedadam;
  std::size_t tau = 1;                 // synchronization period in epochs
  std::optional<double> meta_rate;     // server rate; defaults to the client rate
  std::optional<AdamParams> server;    // server moments; defaults to the client's

  /// Throws ConfigError unless tau >= 1 and meta_rate > 0 when given.
  void validate() const;
};

/// Per-worker state: a local model that takes the client steps, a replica of
/// the global model that only changes at synchronization, and both Adam
/// states. Each worker sees only its grid block of the data.
struct FederatedWorker {
  std::size_t rank = 0;
  Dims origin;
  SparseTensor block;
  SampleShare share;
  KruskalModel local;
  KruskalModel global;
  AdamState client;
  AdamState server;
};

/// Asynchronous cluster: workers iterate independently and synchronize at the
/// first iteration of every epoch whose number is a multiple of tau.
class FederatedCluster {
 public:
  FederatedCluster(const SparseTensor& x, const KruskalModel& model0, const LossFunction& loss,
                   const SamplerConfig& sampler, const AdamParams& client,
                   const FederatedConfig& cfg, const ProcessorGrid& grid, std::uint64_t seed);

  std::size_t workers() const noexcept { return workers_.size(); }
  const FederatedWorker& worker(std::size_t w) const { return workers_.at(w); }

  /// Marks the start of epoch `epoch` (1-based).
  void begin_epoch(std::size_t epoch);

  /// One iteration on every worker; runs the synchronization hook first when
  /// the current epoch is a synchronization epoch and it has not fired yet.
  void iterate(std::uint64_t iter);

  /// LocalSGD: average the local models. FedAdam: server Adam step on the
  /// summed pseudo-gradient D = global - local, then local <- global.
  void synchronize();

  /// Number of synchronizations performed.
  std::size_t synchronizations() const noexcept { return syncs_; }

  /// Sum over workers of each worker's loss estimate on its own block.
  double estimate_loss(std::size_t fnz, std::size_t fz) const;

  void checkpoint();
  void restore();
  double rate() const noexcept { return workers_.front().client.rate(); }
  void scale_rate(double factor);

 private:
  LossFunction loss_;
  SamplerConfig sampler_;
  FederatedConfig cfg_;
  std::uint64_t seed_;
  std::size_t rejection_cap_;
  std::vector<FederatedWorker> workers_;
  std::vector<FederatedWorker> saved_;
  std::size_t epoch_ = 0;
  bool sync_pending_ = false;
  std::size_t syncs_ = 0;
};

/// One LocalSGD iteration for a single worker (no synchronization).
void local_sgd_iteration(FederatedWorker& worker, const LossFunction& loss,
                         const SamplerConfig& sampler, std::uint64_t seed, std::uint64_t iter);

/// The FedAdam client step is the same local iteration.
inline void fedadam_iteration(FederatedWorker& worker, const LossFunction& loss,
                              const SamplerConfig& sampler, std::uint64_t seed,
                              std::uint64_t iter) {
  local_sgd_iteration(worker, loss, sampler, seed, iter);
}

struct FederatedRunResult {
  KruskalModel model;  // worker 0's local model
  AnnealResult anneal;
  std::size_t synchronizations = 0;
};

/// Epoch loop with annealing over an asynchronous cluster. The loss used for
/// accept/reject decisions is the sum of the worker-local estimates.
FederatedRunResult run_federated(const SparseTensor& x, const KruskalModel& model0,
                                 const LossFunction& loss, const SamplerConfig& sampler,
                                 const AdamParams& client, const EpochConfig& epochs,
                                 const FederatedConfig& cfg, const ProcessorGrid& grid,
                                 std::uint64_t seed, const Clock& clock = {});

}  // namespace gcp
