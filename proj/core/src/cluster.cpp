#include "gcp/cluster.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "gcp/error.hpp"
#include "gcp/message_bus.hpp"
#include "gcp/mttkrp.hpp"

namespace gcp {

DistributionScheme parse_distribution_scheme(const std::string& name) {
  if (name == "all-reduce" || name == "all_reduce" || name == "allreduce")
    return DistributionScheme::all_reduce;
  if (name == "two-sided" || name == "two_sided") return DistributionScheme::two_sided;
  throw ConfigError("unknown distribution scheme '" + name + "' (expected all-reduce|two-sided)");
}

std::string to_string(DistributionScheme scheme) {
  return scheme == DistributionScheme::all_reduce ? "all-reduce" : "two-sided";
}

SampleAddressing parse_sample_addressing(const std::string& name) {
  if (name == "per-worker" || name == "per_worker") return SampleAddressing::per_worker;
  if (name == "global" || name == "global-slots" || name == "global_slots")
    return SampleAddressing::global_slots;
  throw ConfigError("unknown sample addressing '" + name + "' (expected per-worker|global)");
}

std::string to_string(SampleAddressing addressing) {
  return addressing == SampleAddressing::per_worker ? "per-worker" : "global";
}

ExecutionPolicy parse_execution_policy(const std::string& name) {
  if (name == "forward") return ExecutionPolicy::forward;
  if (name == "reverse") return ExecutionPolicy::reverse;
  if (name == "threaded") return ExecutionPolicy::threaded;
  throw ConfigError("unknown execution policy '" + name + "' (expected forward|reverse|threaded)");
}

void ClusterOptions::validate(const SamplerConfig& sampler) const {
  if (fused && sampler.scheme != SamplingScheme::semi_stratified)
    throw ConfigError("fused sampling-MTTKRP requires semi-stratified sampling");
  if (fused && scheme == DistributionScheme::two_sided)
    throw ConfigError("the two-sided scheme cannot use fused sampling-MTTKRP");
}

namespace {

enum Tag : int { kReduce = 0, kReduceResult = 1, kRequest = 2, kReply = 3, kExport = 4 };

int tag_for(Tag tag, std::size_t mode) { return static_cast<int>(mode) * 8 + tag; }

struct ModeCounters {
  std::uint64_t scalars_reduced = 0;
  std::uint64_t rows_imported = 0;
  std::uint64_t rows_exported = 0;
  std::uint64_t setup_msgs = 0;
};

struct Worker {
  std::size_t rank = 0;
  std::vector<std::size_t> grid_coords;
  Dims origin;
  Dims extent;
  SparseTensor block;
  SampleShare share;
  KruskalModel model;  // block-shaped replica (all-reduce) or overlap copy (two-sided)
  AdamState adam;
  std::vector<std::pair<index_t, index_t>> owned;  // local rows per mode (two-sided)

  // per-iteration scratch
  SamplePattern pattern;
  std::optional<SamplerConfig> local_cfg;
  KruskalModel grad;
  std::vector<std::vector<index_t>> touched;  // local rows per mode
  std::vector<ModeCounters> counters;
};

SamplePattern empty_pattern(const Dims& extent, SamplingScheme scheme) {
  SamplePattern p;
  p.dims = extent;
  p.scheme = scheme;
  return p;
}

}  // namespace

struct Cluster::Impl {
  SparseTensor x;
  LossFunction loss;
  SamplerConfig sampler;
  ProcessorGrid grid;
  ClusterOptions options;
  std::uint64_t seed;
  Dims dims;
  index_t rank;
  std::vector<Worker> workers;
  MessageBus bus;
  CommLedger ledger;
  std::vector<std::pair<KruskalModel, AdamState>> saved;

  Impl(const SparseTensor& x_in, const KruskalModel& model0, const LossFunction& loss_in,
       const SamplerConfig& sampler_in, const AdamParams& adam, const ProcessorGrid& grid_in,
       const ClusterOptions& options_in, std::uint64_t seed_in)
      : x(x_in),
        loss(loss_in),
        sampler(sampler_in),
        grid(grid_in),
        options(options_in),
        seed(seed_in),
        dims(x_in.dims()),
        rank(model0.rank()),
        bus(grid_in.workers()) {
    sampler.validate();
    options.validate(sampler);
    if (!model0.conforms(dims))
      throw ShapeError("initial model dims " + to_string(model0.dims()) +
                       " do not match tensor dims " + to_string(dims));
    if (grid.dims() != dims) throw ShapeError("processor grid does not match tensor dims");
    if (x.index_mode() == SearchMode::none) x.build_index(sampler.search);

    auto blocks = partition_tensor(x, grid);
    const auto shares = allocate_samples(sampler.nonzero_samples, sampler.zero_samples, grid.workers());
    workers.resize(grid.workers());
    for (std::size_t w = 0; w < workers.size(); ++w) {
      auto& wk = workers[w];
      wk.rank = w;
      wk.grid_coords = grid.coords_of(w);
      wk.origin = blocks[w].origin;
      wk.extent = blocks[w].extent;
      wk.block = std::move(blocks[w].tensor);
      wk.block.build_index(sampler.search);
      wk.share = shares[w];
      wk.model = extract_block(model0, wk.origin, wk.extent);
      wk.adam = AdamState(wk.model.size(), adam, loss.lower_bound);
      wk.grad = KruskalModel(wk.extent, rank);
      wk.counters.assign(dims.size(), {});
      wk.touched.assign(dims.size(), {});
      for (std::size_t k = 0; k < dims.size(); ++k) {
        const auto members = grid.slice_members(k, wk.grid_coords[k]);
        const auto split = balanced_split(wk.extent[k], members.size());
        const auto j = static_cast<std::size_t>(
            std::find(members.begin(), members.end(), w) - members.begin());
        wk.owned.emplace_back(split[j], split[j + 1]);
      }
    }
  }

  template <class F>
  void run_phase(F&& f) {
    const std::size_t n = workers.size();
    switch (options.execution) {
      case ExecutionPolicy::forward:
        for (std::size_t w = 0; w < n; ++w) f(workers[w]);
        break;
      case ExecutionPolicy::reverse:
        for (std::size_t w = n; w-- > 0;) f(workers[w]);
        break;
      case ExecutionPolicy::threaded: {
        std::vector<std::exception_ptr> errors(n);
        std::vector<std::thread> threads;
        threads.reserve(n);
        for (std::size_t w = 0; w < n; ++w)
          threads.emplace_back([&, w] {
            try {
              f(workers[w]);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        for (auto& t : threads) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
        break;
      }
    }
  }

  /// Worker owning global row `row` of `mode` under two-sided.
  std::size_t owner_of(std::size_t mode, index_t row) const {
    const std::size_t b = grid.block_of(mode, row);
    const auto members = grid.slice_members(mode, b);
    const index_t local = row - grid.block_begin(mode, b);
    for (auto m : members) {
      const auto [lo, hi] = workers[m].owned[mode];
      if (local >= lo && local < hi) return m;
    }
    throw InternalError("no owner for row " + std::to_string(row) + " of mode " + std::to_string(mode));
  }

  bool owns(const Worker& wk, std::size_t mode, index_t local_row) const {
    return local_row >= wk.owned[mode].first && local_row < wk.owned[mode].second;
  }

  // -- sampling ------------------------------------------------------------

  std::optional<SamplerConfig> local_config(const Worker& wk) const {
    std::size_t p = wk.share.nonzero;
    std::size_t q = wk.share.zero;
    if (wk.block.nnz() == 0) p = 0;
    if (sampler.scheme == SamplingScheme::stratified && wk.block.nnz() == wk.block.total_entries())
      q = 0;
    if (p + q == 0) return std::nullopt;
    return SamplerConfig(sampler.scheme, p, q, sampler.search, sampler.rejection_cap);
  }

  void draw_patterns(std::uint64_t iter) {
    if (options.addressing == SampleAddressing::global_slots) {
      const auto global = draw_sample_pattern(x, sampler, gradient_stream(seed, iter, 0));
      run_phase([&](Worker& wk) { wk.pattern = restrict_pattern(global, wk); });
      return;
    }
    run_phase([&](Worker& wk) {
      wk.local_cfg = local_config(wk);
      if (options.fused) return;
      wk.pattern = wk.local_cfg
                       ? draw_sample_pattern(wk.block, *wk.local_cfg, gradient_stream(seed, iter, wk.rank))
                       : empty_pattern(wk.extent, sampler.scheme);
    });
  }

  SamplePattern restrict_pattern(const SamplePattern& global, const Worker& wk) const {
    SamplePattern p = empty_pattern(wk.extent, global.scheme);
    p.weights = global.weights;
    const std::size_t d = dims.size();
    for (std::size_t s = 0; s < global.size(); ++s) {
      const auto c = global.sample_coords(s);
      bool inside = true;
      for (std::size_t k = 0; k < d && inside; ++k)
        inside = c[k] >= wk.origin[k] && c[k] < wk.origin[k] + wk.extent[k];
      if (!inside) continue;
      for (std::size_t k = 0; k < d; ++k) p.coords.push_back(c[k] - wk.origin[k]);
      p.data.push_back(global.data[s]);
      if (global.is_nonzero(s))
        ++p.nonzero_samples;
      else
        ++p.zero_samples;
    }
    return p;
  }

  void local_gradient(Worker& wk, std::uint64_t iter) {
    if (options.fused && options.addressing == SampleAddressing::per_worker) {
      if (wk.local_cfg)
        fused_sample_mttkrp(wk.block, wk.model, loss, *wk.local_cfg,
                            gradient_stream(seed, iter, wk.rank), wk.grad);
      else
        wk.grad.fill(0.0);
      return;
    }
    wk.grad = mttkrp_all(evaluate_pattern(wk.pattern, wk.model, loss), wk.model);
  }

  // -- all-reduce ----------------------------------------------------------

  void allreduce(std::uint64_t iter) {
    run_phase([&](Worker& wk) { local_gradient(wk, iter); });
    for (std::size_t k = 0; k < dims.size(); ++k) {
      run_phase([&](Worker& wk) {
        const auto members = grid.slice_members(k, wk.grid_coords[k]);
        if (members.size() < 2) return;
        wk.counters[k].scalars_reduced += wk.extent[k] * rank;
        if (members.front() != wk.rank) {
          const auto rows = wk.grad.factor(k).data();
          bus.send(wk.rank, members.front(), tag_for(kReduce, k), {},
                   std::vector<double>(rows.begin(), rows.end()));
        }
      });
      run_phase([&](Worker& wk) {
        const auto members = grid.slice_members(k, wk.grid_coords[k]);
        if (members.size() < 2 || members.front() != wk.rank) return;
        auto own = wk.grad.factor(k).data();
        std::vector<double> acc(own.size(), 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += own[i];
        for (const auto& m : bus.receive(wk.rank, tag_for(kReduce, k)))
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m.payload[i];
        std::copy(acc.begin(), acc.end(), own.begin());
        for (std::size_t j = 1; j < members.size(); ++j)
          bus.send(wk.rank, members[j], tag_for(kReduceResult, k), {}, acc);
      });
      run_phase([&](Worker& wk) {
        const auto members = grid.slice_members(k, wk.grid_coords[k]);
        if (members.size() < 2 || members.front() == wk.rank) return;
        auto msgs = bus.receive(wk.rank, tag_for(kReduceResult, k));
        if (msgs.size() != 1) throw InternalError("all-reduce result missing");
        std::copy(msgs[0].payload.begin(), msgs[0].payload.end(), wk.grad.factor(k).data().begin());
      });
    }
  }

  // -- two-sided -----------------------------------------------------------

  void collect_touched(Worker& wk) {
    const std::size_t d = dims.size();
    for (std::size_t k = 0; k < d; ++k) {
      auto& t = wk.touched[k];
      t.clear();
      for (std::size_t s = 0; s < wk.pattern.size(); ++s) t.push_back(wk.pattern.sample_coords(s)[k]);
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
    }
  }

  /// Non-owned touched rows of `mode`, grouped by owner (global row ids).
  std::map<std::size_t, std::vector<index_t>> remote_rows(const Worker& wk, std::size_t mode) const {
    std::map<std::size_t, std::vector<index_t>> out;
    for (auto r : wk.touched[mode]) {
      if (owns(wk, mode, r)) continue;
      const index_t global = r + wk.origin[mode];
      out[owner_of(mode, global)].push_back(global);
    }
    return out;
  }

  void two_sided(std::uint64_t) {
    const std::size_t d = dims.size();
    // Requests for remote rows.
    run_phase([&](Worker& wk) {
      collect_touched(wk);
      for (std::size_t k = 0; k < d; ++k)
        for (auto& [owner, rows] : remote_rows(wk, k)) {
          bus.send(wk.rank, owner, tag_for(kRequest, k), std::move(rows), {});
          ++wk.counters[k].setup_msgs;
        }
    });
    // Owners answer with current row values.
    run_phase([&](Worker& wk) {
      for (std::size_t k = 0; k < d; ++k) {
        auto f = wk.model.factor(k);
        for (auto& req : bus.receive(wk.rank, tag_for(kRequest, k))) {
          std::vector<double> values;
          values.reserve(req.rows.size() * rank);
          for (auto g : req.rows) {
            const auto row = f.row(g - wk.origin[k]);
            values.insert(values.end(), row.begin(), row.end());
          }
          bus.send(wk.rank, req.sender, tag_for(kReply, k), std::move(req.rows), std::move(values));
        }
      }
    });
    // Import, local MTTKRP, export partial rows.
    run_phase([&](Worker& wk) {
      for (std::size_t k = 0; k < d; ++k) {
        auto f = wk.model.factor(k);
        for (const auto& rep : bus.receive(wk.rank, tag_for(kReply, k))) {
          for (std::size_t j = 0; j < rep.rows.size(); ++j)
            std::copy_n(rep.payload.begin() + static_cast<std::ptrdiff_t>(j * rank), rank,
                        f.row(rep.rows[j] - wk.origin[k]).begin());
          wk.counters[k].rows_imported += rep.rows.size();
        }
      }
      wk.grad = mttkrp_all(evaluate_pattern(wk.pattern, wk.model, loss), wk.model);
      for (std::size_t k = 0; k < d; ++k) {
        auto g = wk.grad.factor(k);
        for (auto& [owner, rows] : remote_rows(wk, k)) {
          std::vector<double> values;
          values.reserve(rows.size() * rank);
          for (auto r : rows) {
            const auto row = g.row(r - wk.origin[k]);
            values.insert(values.end(), row.begin(), row.end());
          }
          wk.counters[k].rows_exported += rows.size();
          bus.send(wk.rank, owner, tag_for(kExport, k), std::move(rows), std::move(values));
        }
      }
    });
    // Owners reduce contributions in ascending sender order.
    run_phase([&](Worker& wk) {
      for (std::size_t k = 0; k < d; ++k) {
        auto g = wk.grad.factor(k);
        const auto [lo, hi] = wk.owned[k];
        std::vector<double> acc((hi - lo) * rank, 0.0);
        auto add_row = [&](index_t local, const double* src) {
          double* dst = acc.data() + (local - lo) * rank;
          for (index_t r = 0; r < rank; ++r) dst[r] += src[r];
        };
        auto add_own = [&] {
          for (auto r : wk.touched[k])
            if (owns(wk, k, r)) add_row(r, g.row(r).data());
        };
        bool own_done = false;
        for (const auto& m : bus.receive(wk.rank, tag_for(kExport, k))) {
          if (!own_done && m.sender > wk.rank) {
            add_own();
            own_done = true;
          }
          for (std::size_t j = 0; j < m.rows.size(); ++j) {
            const index_t local = m.rows[j] - wk.origin[k];
            if (!owns(wk, k, local)) throw InternalError("exported row sent to a non-owner");
            add_row(local, m.payload.data() + j * rank);
          }
        }
        if (!own_done) add_own();
        auto all = g.data();
        std::fill(all.begin(), all.end(), 0.0);
        std::copy(acc.begin(), acc.end(), g.row(lo).begin());
      }
    });
  }

  void exchange(std::uint64_t iter) {
    for (auto& wk : workers) wk.counters.assign(dims.size(), {});
    draw_patterns(iter);
    if (options.scheme == DistributionScheme::all_reduce)
      allreduce(iter);
    else
      two_sided(iter);
    if (bus.pending() != 0) throw InternalError("undelivered messages after gradient exchange");
    for (std::size_t k = 0; k < dims.size(); ++k) {
      LedgerRow row;
      row.iter = iter;
      row.mode = k;
      for (const auto& wk : workers) {
        row.scalars_reduced += wk.counters[k].scalars_reduced;
        row.rows_imported += wk.counters[k].rows_imported;
        row.rows_exported += wk.counters[k].rows_exported;
        row.setup_msgs += wk.counters[k].setup_msgs;
      }
      ledger.record(row);
    }
  }

  void step() {
    run_phase([&](Worker& wk) {
      if (options.scheme == DistributionScheme::all_reduce) {
        adam_update(wk.model, wk.grad, wk.adam);
        return;
      }
      wk.adam.advance();
      for (std::size_t k = 0; k < dims.size(); ++k) {
        const auto [lo, hi] = wk.owned[k];
        const std::size_t base = wk.model.offset(k);
        wk.adam.apply(wk.model.data(), wk.grad.data(), base + lo * rank, base + hi * rank);
      }
    });
  }

  /// Worker whose copy of `mode` rows [begin,end) of block `b` is authoritative.
  template <class Get>
  KruskalModel assemble(Get&& get) const {
    KruskalModel out(dims, rank);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      auto dst = out.factor(k);
      for (std::size_t b = 0; b < grid.counts()[k]; ++b) {
        const index_t begin = grid.block_begin(k, b);
        for (auto m : grid.slice_members(k, b)) {
          const auto& wk = workers[m];
          auto [lo, hi] = options.scheme == DistributionScheme::two_sided
                              ? wk.owned[k]
                              : std::pair<index_t, index_t>{0, wk.extent[k]};
          const auto src = get(wk).factor(k);
          for (index_t r = lo; r < hi; ++r)
            std::copy_n(src.row(r).data(), rank, dst.row(begin + r).data());
          if (options.scheme == DistributionScheme::all_reduce) break;
        }
      }
    }
    return out;
  }
};

Cluster::Cluster(const SparseTensor& x, const KruskalModel& model0, const LossFunction& loss,
                 const SamplerConfig& sampler, const AdamParams& adam, const ProcessorGrid& grid,
                 const ClusterOptions& options, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(x, model0, loss, sampler, adam, grid, options, seed)) {}

Cluster::~Cluster() = default;
Cluster::Cluster(Cluster&&) noexcept = default;
Cluster& Cluster::operator=(Cluster&&) noexcept = default;

std::size_t Cluster::workers() const noexcept { return impl_->workers.size(); }
const ProcessorGrid& Cluster::grid() const noexcept { return impl_->grid; }
const ClusterOptions& Cluster::options() const noexcept { return impl_->options; }
const SparseTensor& Cluster::tensor() const noexcept { return impl_->x; }

KruskalModel Cluster::gradient(std::uint64_t iter) {
  impl_->exchange(iter);
  return impl_->assemble([](const Worker& wk) -> const KruskalModel& { return wk.grad; });
}

void Cluster::iterate(std::uint64_t iter) {
  impl_->exchange(iter);
  impl_->step();
}

KruskalModel Cluster::model() const {
  return impl_->assemble([](const Worker& wk) -> const KruskalModel& { return wk.model; });
}

double Cluster::estimate_loss(std::size_t fnz, std::size_t fz) const {
  return estimated_loss(impl_->x, model(), impl_->loss, fnz, fz, objective_stream(impl_->seed, 0),
                        {}, impl_->sampler.rejection_cap);
}

void Cluster::checkpoint() {
  impl_->saved.clear();
  for (const auto& wk : impl_->workers) impl_->saved.emplace_back(wk.model, wk.adam);
}

void Cluster::restore() {
  if (impl_->saved.size() != impl_->workers.size()) throw ConfigError("no checkpoint to restore");
  for (std::size_t w = 0; w < impl_->workers.size(); ++w) {
    auto& wk = impl_->workers[w];
    const double current = wk.adam.rate();
    wk.model = impl_->saved[w].first;
    wk.adam = impl_->saved[w].second;
    wk.adam.set_rate(current);
  }
}

double Cluster::rate() const noexcept { return impl_->workers.front().adam.rate(); }

void Cluster::scale_rate(double factor) {
  for (auto& wk : impl_->workers) wk.adam.set_rate(wk.adam.rate() * factor);
}

const CommLedger& Cluster::ledger() const noexcept { return impl_->ledger; }
CommLedger& Cluster::ledger() noexcept { return impl_->ledger; }

const KruskalModel& Cluster::worker_model(std::size_t worker) const {
  if (worker >= impl_->workers.size()) throw IndexError("worker index out of range");
  return impl_->workers[worker].model;
}

const AdamState& Cluster::worker_adam(std::size_t worker) const {
  if (worker >= impl_->workers.size()) throw IndexError("worker index out of range");
  return impl_->workers[worker].adam;
}

std::pair<index_t, index_t> Cluster::owned_rows(std::size_t worker, std::size_t mode) const {
  if (worker >= impl_->workers.size()) throw IndexError("worker index out of range");
  if (mode >= impl_->dims.size()) throw IndexError("mode out of range");
  const auto& wk = impl_->workers[worker];
  return {wk.origin[mode] + wk.owned[mode].first, wk.origin[mode] + wk.owned[mode].second};
}

}  // namespace gcp
