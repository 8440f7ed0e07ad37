#include "gcp/grid.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "gcp/error.hpp"

namespace gcp {

std::vector<index_t> balanced_split(index_t extent, std::size_t parts) {
  if (parts == 0) throw ConfigError("cannot split a range into zero parts");
  std::vector<index_t> b(parts + 1, 0);
  const index_t base = extent / parts;
  const index_t extra = extent % parts;
  for (std::size_t j = 0; j < parts; ++j) b[j + 1] = b[j] + base + (j < extra ? 1 : 0);
  return b;
}

ProcessorGrid::ProcessorGrid(Dims counts, const Dims& dims) : counts_(std::move(counts)), dims_(dims) {
  if (counts_.size() != dims_.size())
    throw ConfigError("grid has " + std::to_string(counts_.size()) + " modes, tensor has " +
                      std::to_string(dims_.size()));
  workers_ = 1;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] == 0) throw ConfigError("grid counts must be positive");
    if (counts_[k] > dims_[k])
      throw ConfigError("grid splits mode " + std::to_string(k) + " of size " +
                        std::to_string(dims_[k]) + " into " + std::to_string(counts_[k]) + " blocks");
    workers_ *= counts_[k];
    bounds_.push_back(balanced_split(dims_[k], counts_[k]));
  }
}

std::size_t ProcessorGrid::block_of(std::size_t mode, index_t row) const {
  const auto& b = bounds_[mode];
  if (row >= b.back()) throw IndexError("row " + std::to_string(row) + " outside mode " + std::to_string(mode));
  return static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), row) - b.begin()) - 1;
}

std::vector<std::size_t> ProcessorGrid::coords_of(std::size_t rank) const {
  std::vector<std::size_t> c(counts_.size());
  for (std::size_t k = counts_.size(); k-- > 0;) {
    c[k] = rank % counts_[k];
    rank /= counts_[k];
  }
  return c;
}

std::size_t ProcessorGrid::rank_of(std::span<const std::size_t> coords) const {
  std::size_t rank = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) rank = rank * counts_[k] + coords[k];
  return rank;
}

std::vector<std::size_t> ProcessorGrid::slice_members(std::size_t mode, std::size_t block) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < workers_; ++r)
    if (coords_of(r)[mode] == block) out.push_back(r);
  return out;
}

std::vector<std::size_t> ProcessorGrid::fiber_members(std::size_t mode, std::size_t rank) const {
  auto c = coords_of(rank);
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < counts_[mode]; ++b) {
    c[mode] = b;
    out.push_back(rank_of(c));
  }
  return out;
}

Dims ProcessorGrid::block_origin(std::size_t rank) const {
  const auto c = coords_of(rank);
  Dims o(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) o[k] = block_begin(k, c[k]);
  return o;
}

Dims ProcessorGrid::block_extent(std::size_t rank) const {
  const auto c = coords_of(rank);
  Dims e(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) e[k] = block_extent(k, c[k]);
  return e;
}

std::uint64_t grid_storage(const Dims& counts, const Dims& dims) {
  std::uint64_t p = 1;
  for (auto n : counts) p *= n;
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) total += dims[k] * (p / counts[k]);
  return total;
}

namespace {

void search_tuples(std::size_t remaining, std::size_t mode, const Dims& dims, Dims& current,
                   Dims& best, std::uint64_t& best_cost) {
  if (mode + 1 == dims.size()) {
    if (remaining > dims[mode]) return;
    current[mode] = remaining;
    const auto cost = grid_storage(current, dims);
    // Tuples are visited in lexicographic order, so strict < keeps the smallest.
    if (cost < best_cost) {
      best_cost = cost;
      best = current;
    }
    return;
  }
  for (std::size_t n = 1; n <= remaining && n <= dims[mode]; ++n) {
    if (remaining % n != 0) continue;
    current[mode] = n;
    search_tuples(remaining / n, mode + 1, dims, current, best, best_cost);
  }
}

}  // namespace

ProcessorGrid grid_factorization(std::size_t workers, const Dims& dims) {
  if (workers == 0) throw ConfigError("worker count must be positive");
  if (dims.empty()) throw ConfigError("tensor has no modes");
  (void)total_entries(dims);
  Dims current(dims.size(), 1);
  Dims best;
  std::uint64_t best_cost = std::numeric_limits<std::uint64_t>::max();
  search_tuples(workers, 0, dims, current, best, best_cost);
  if (best.empty())
    throw ConfigError("no processor grid with " + std::to_string(workers) +
                      " workers fits tensor dims " + to_string(dims));
  return ProcessorGrid(best, dims);
}

std::vector<WorkerBlock> partition_tensor(const SparseTensor& x, const ProcessorGrid& grid) {
  if (grid.dims() != x.dims()) throw ShapeError("grid does not match tensor dims");
  const std::size_t d = x.ndims();
  std::vector<WorkerBlock> blocks(grid.workers());
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    blocks[r].rank = r;
    blocks[r].origin = grid.block_origin(r);
    blocks[r].extent = grid.block_extent(r);
    blocks[r].tensor = SparseTensor(blocks[r].extent);
  }
  std::vector<std::size_t> bc(d);
  std::vector<index_t> local(d);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const auto c = x.coords(e);
    for (std::size_t k = 0; k < d; ++k) bc[k] = grid.block_of(k, c[k]);
    auto& blk = blocks[grid.rank_of(bc)];
    for (std::size_t k = 0; k < d; ++k) local[k] = c[k] - blk.origin[k];
    blk.tensor.push_back(local, x.value(e));
    blk.source_entries.push_back(e);
  }
  return blocks;
}

std::vector<std::size_t> split_count(std::size_t total, std::size_t parts) {
  if (parts == 0) throw ConfigError("cannot split a count over zero parts");
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t j = 0; j < total % parts; ++j) ++out[j];
  return out;
}

std::vector<SampleShare> allocate_samples(std::size_t nonzero, std::size_t zero,
                                          std::size_t workers) {
  const auto p = split_count(nonzero, workers);
  const auto q = split_count(zero, workers);
  std::vector<SampleShare> out(workers);
  for (std::size_t w = 0; w < workers; ++w) out[w] = {p[w], q[w]};
  return out;
}

}  // namespace gcp
