#include "gcp/gcp_adam.hpp"

#include "gcp/error.hpp"

namespace gcp {

ProcessorGrid make_topology_grid(const Topology& topology, const Dims& dims) {
  if (topology.grid_counts) {
    ProcessorGrid grid(*topology.grid_counts, dims);
    if (grid.workers() != topology.workers)
      throw ConfigError("grid has " + std::to_string(grid.workers()) + " workers, expected " +
                        std::to_string(topology.workers));
    return grid;
  }
  return grid_factorization(topology.workers, dims);
}

GcpRunResult run_gcp_adam(const SparseTensor& x, const KruskalModel& model0,
                          const LossFunction& loss, const GcpAdamConfig& cfg, const Clock& clock) {
  cfg.sampler.validate();
  cfg.adam.validate();
  cfg.epochs.validate();
  cfg.topology.options.validate(cfg.sampler);
  Cluster cluster(x, model0, loss, cfg.sampler, cfg.adam, make_topology_grid(cfg.topology, x.dims()),
                  cfg.topology.options, cfg.seed);
  ClusterSolver solver(cluster, cfg.epochs.objective_nonzeros, cfg.epochs.objective_zeros);
  GcpRunResult result;
  result.anneal = run_annealed_epochs(solver, cfg.epochs, cfg.adam.decay, clock);
  result.model = cluster.model();
  result.ledger = cluster.ledger();
  return result;
}

}  // namespace gcp
