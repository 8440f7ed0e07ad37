#include "gcp/federated.hpp"

#include <algorithm>

#include "gcp/cluster.hpp"
#include "gcp/error.hpp"
#include "gcp/mttkrp.hpp"

namespace gcp {

FederatedMethod parse_federated_method(const std::string& name) {
  if (name == "local-sgd" || name == "local_sgd" || name == "localsgd") return FederatedMethod::local_sgd;
  if (name == "fedadam") return FederatedMethod::fedadam;
  throw ConfigError("unknown federated method '" + name + "' (expected local-sgd|fedadam)");
}

std::string to_string(FederatedMethod method) {
  return method == FederatedMethod::local_sgd ? "local-sgd" : "fedadam";
}

void FederatedConfig::validate() const {
  if (tau == 0) throw ConfigError("synchronization period must be at least 1");
  if (meta_rate && !(*meta_rate > 0.0)) throw ConfigError("meta rate must be positive");
  if (server) server->validate();
}

namespace {

std::optional<SamplerConfig> share_config(const SparseTensor& block, const SamplerConfig& sampler,
                                          const SampleShare& share) {
  std::size_t p = share.nonzero;
  std::size_t q = share.zero;
  if (block.nnz() == 0) p = 0;
  if (sampler.scheme == SamplingScheme::stratified && block.nnz() == block.total_entries()) q = 0;
  if (p + q == 0) return std::nullopt;
  return SamplerConfig(sampler.scheme, p, q, sampler.search, sampler.rejection_cap);
}

}  // namespace

void local_sgd_iteration(FederatedWorker& worker, const LossFunction& loss,
                         const SamplerConfig& sampler, std::uint64_t seed, std::uint64_t iter) {
  KruskalModel grad(worker.local.dims(), worker.local.rank());
  if (const auto cfg = share_config(worker.block, sampler, worker.share))
    grad = mttkrp_all(sample_gradient_tensor(worker.block, worker.local, loss, *cfg,
                                             gradient_stream(seed, iter, worker.rank), worker.origin),
                      worker.local);
  adam_update(worker.local, grad, worker.client);
}

FederatedCluster::FederatedCluster(const SparseTensor& x, const KruskalModel& model0,
                                   const LossFunction& loss, const SamplerConfig& sampler,
                                   const AdamParams& client, const FederatedConfig& cfg,
                                   const ProcessorGrid& grid, std::uint64_t seed)
    : loss_(loss), sampler_(sampler), cfg_(cfg), seed_(seed), rejection_cap_(sampler.rejection_cap) {
  sampler_.validate();
  client.validate();
  cfg_.validate();
  if (!model0.conforms(x.dims())) throw ShapeError("initial model does not match tensor dims");
  if (grid.dims() != x.dims()) throw ShapeError("processor grid does not match tensor dims");

  SparseTensor indexed = x;
  if (indexed.index_mode() == SearchMode::none) indexed.build_index(sampler_.search);
  auto blocks = partition_tensor(indexed, grid);
  const auto shares = allocate_samples(sampler_.nonzero_samples, sampler_.zero_samples, grid.workers());

  AdamParams server = cfg_.server.value_or(client);
  server.rate = cfg_.meta_rate.value_or(client.rate);
  workers_.resize(grid.workers());
  for (std::size_t w = 0; w < workers_.size(); ++w) {
    auto& wk = workers_[w];
    wk.rank = w;
    wk.origin = blocks[w].origin;
    wk.block = std::move(blocks[w].tensor);
    wk.block.build_index(sampler_.search);
    wk.share = shares[w];
    wk.local = model0;
    wk.global = model0;
    wk.client = AdamState(model0.size(), client, loss.lower_bound);
    wk.server = AdamState(model0.size(), server, loss.lower_bound);
  }
}

void FederatedCluster::begin_epoch(std::size_t epoch) {
  if (epoch == 0) throw ConfigError("epochs are numbered from 1");
  epoch_ = epoch;
  sync_pending_ = epoch % cfg_.tau == 0;
}

void FederatedCluster::iterate(std::uint64_t iter) {
  if (epoch_ == 0) throw ConfigError("iterate called before begin_epoch");
  if (sync_pending_) {
    synchronize();
    sync_pending_ = false;
  }
  for (auto& wk : workers_) local_sgd_iteration(wk, loss_, sampler_, seed_, iter);
}

void FederatedCluster::synchronize() {
  const std::size_t n = workers_.front().local.size();
  std::vector<double> acc(n, 0.0);
  if (cfg_.method == FederatedMethod::local_sgd) {
    for (const auto& wk : workers_) {
      const auto m = wk.local.data();
      for (std::size_t i = 0; i < n; ++i) acc[i] += m[i];
    }
    const double count = static_cast<double>(workers_.size());
    for (auto& v : acc) v /= count;
    for (auto& wk : workers_) std::copy(acc.begin(), acc.end(), wk.local.data().begin());
  } else {
    for (const auto& wk : workers_) {
      const auto u = wk.global.data();
      const auto m = wk.local.data();
      for (std::size_t i = 0; i < n; ++i) acc[i] += u[i] - m[i];
    }
    for (auto& wk : workers_) {
      wk.server.advance();
      wk.server.apply(wk.global.data(), acc, 0, n);
      wk.local = wk.global;
    }
  }
  ++syncs_;
}

double FederatedCluster::estimate_loss(std::size_t fnz, std::size_t fz) const {
  const auto nz = split_count(fnz, workers_.size());
  const auto z = split_count(fz, workers_.size());
  double total = 0.0;
  for (const auto& wk : workers_) {
    const std::size_t a = wk.block.nnz() == 0 ? 0 : nz[wk.rank];
    const std::size_t b = wk.block.nnz() == wk.block.total_entries() ? 0 : z[wk.rank];
    if (a + b == 0) continue;
    total += estimated_loss(wk.block, wk.local, loss_, a, b, objective_stream(seed_, wk.rank),
                            wk.origin, rejection_cap_);
  }
  return total;
}

void FederatedCluster::checkpoint() { saved_ = workers_; }

void FederatedCluster::restore() {
  if (saved_.size() != workers_.size()) throw ConfigError("no checkpoint to restore");
  const double current = rate();
  workers_ = saved_;
  for (auto& wk : workers_) wk.client.set_rate(current);
}

void FederatedCluster::scale_rate(double factor) {
  for (auto& wk : workers_) wk.client.set_rate(wk.client.rate() * factor);
}

namespace {

class FederatedSolver final : public Solver {
 public:
  FederatedSolver(FederatedCluster& c, std::size_t fnz, std::size_t fz) : c_(&c), fnz_(fnz), fz_(fz) {}
  void begin_epoch(std::size_t epoch) override { c_->begin_epoch(epoch); }
  void iterate(std::uint64_t iter) override { c_->iterate(iter); }
  double estimate_loss() override { return c_->estimate_loss(fnz_, fz_); }
  void checkpoint() override { c_->checkpoint(); }
  void restore() override { c_->restore(); }
  void scale_rate(double factor) override { c_->scale_rate(factor); }
  double rate() const override { return c_->rate(); }

 private:
  FederatedCluster* c_;
  std::size_t fnz_;
  std::size_t fz_;
};

}  // namespace

FederatedRunResult run_federated(const SparseTensor& x, const KruskalModel& model0,
                                 const LossFunction& loss, const SamplerConfig& sampler,
                                 const AdamParams& client, const EpochConfig& epochs,
                                 const FederatedConfig& cfg, const ProcessorGrid& grid,
                                 std::uint64_t seed, const Clock& clock) {
  epochs.validate();
  FederatedCluster cluster(x, model0, loss, sampler, client, cfg, grid, seed);
  FederatedSolver solver(cluster, epochs.objective_nonzeros, epochs.objective_zeros);
  FederatedRunResult result;
  result.anneal = run_annealed_epochs(solver, epochs, client.decay, clock);
  result.model = cluster.worker(0).local;
  result.synchronizations = cluster.synchronizations();
  return result;
}

}  // namespace gcp
