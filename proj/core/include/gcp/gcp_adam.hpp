#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "gcp/adam.hpp"
#include "gcp/annealing.hpp"
#include "gcp/cluster.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/ledger.hpp"
#include "gcp/loss.hpp"
#include "gcp/sampler.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

struct Topology {
  std::size_t workers = 1;
  std::optional<Dims> grid_counts;  // default: grid_factorization(workers, dims)
  ClusterOptions options;
};

struct GcpAdamConfig {
  SamplerConfig sampler{SamplingScheme::stratified, 1, 1};
  AdamParams adam;
  EpochConfig epochs;
  std::uint64_t seed = 0;
  Topology topology;
};

struct GcpRunResult {
  KruskalModel model;
  AnnealResult anneal;
  CommLedger ledger;
};

/// Grid for a topology: explicit counts if given, otherwise the
/// storage-minimizing factorization of the worker count.
ProcessorGrid make_topology_grid(const Topology& topology, const Dims& dims);

/// Solver adapter for a synchronous cluster.
class ClusterSolver final : public Solver {
 public:
  ClusterSolver(Cluster& cluster, std::size_t fnz, std::size_t fz)
      : cluster_(&cluster), fnz_(fnz), fz_(fz) {}

  void iterate(std::uint64_t iter) override { cluster_->iterate(iter); }
  double estimate_loss() override { return cluster_->estimate_loss(fnz_, fz_); }
  void checkpoint() override { cluster_->checkpoint(); }
  void restore() override { cluster_->restore(); }
  void scale_rate(double factor) override { cluster_->scale_rate(factor); }
  double rate() const override { return cluster_->rate(); }

 private:
  Cluster* cluster_;
  std::size_t fnz_;
  std::size_t fz_;
};

/// Synchronous GCP-Adam with annealing. A single worker is the serial
/// algorithm; more workers run the simulated cluster.
GcpRunResult run_gcp_adam(const SparseTensor& x, const KruskalModel& model0,
                          const LossFunction& loss, const GcpAdamConfig& cfg,
                          const Clock& clock = {});

}  // namespace gcp
