#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcp/sparse_tensor.hpp"

namespace gcp {

/// Splits [0, extent) into `parts` contiguous ranges whose sizes differ by at
/// most one; the first (extent mod parts) ranges are the longer ones. Returns
/// parts+1 boundaries. Empty ranges appear when parts > extent.
std::vector<index_t> balanced_split(index_t extent, std::size_t parts);

/// d-way processor grid N_1 x ... x N_d with its per-mode block boundaries.
/// Worker ranks enumerate grid coordinates row-major (last mode fastest).
class ProcessorGrid {
 public:
  ProcessorGrid() = default;
  /// Throws ConfigError if counts and dims differ in length, any count is
  /// zero or any count exceeds its dimension.
  ProcessorGrid(Dims counts, const Dims& dims);

  const Dims& counts() const noexcept { return counts_; }
  const Dims& dims() const noexcept { return dims_; }
  std::size_t ndims() const noexcept { return counts_.size(); }
  std::size_t workers() const noexcept { return workers_; }

  /// Boundaries of the blocks along `mode` (counts[mode]+1 values).
  const std::vector<index_t>& bounds(std::size_t mode) const noexcept { return bounds_[mode]; }
  index_t block_begin(std::size_t mode, std::size_t block) const noexcept {
    return bounds_[mode][block];
  }
  index_t block_extent(std::size_t mode, std::size_t block) const noexcept {
    return bounds_[mode][block + 1] - bounds_[mode][block];
  }
  /// Block index along `mode` containing row `row`.
  std::size_t block_of(std::size_t mode, index_t row) const;

  std::vector<std::size_t> coords_of(std::size_t rank) const;
  std::size_t rank_of(std::span<const std::size_t> coords) const;

  /// Ranks sharing grid coordinate `block` in `mode`, ascending.
  std::vector<std::size_t> slice_members(std::size_t mode, std::size_t block) const;
  /// Ranks that differ from `rank` only in the `mode` coordinate, ascending.
  std::vector<std::size_t> fiber_members(std::size_t mode, std::size_t rank) const;

  Dims block_origin(std::size_t rank) const;
  Dims block_extent(std::size_t rank) const;

 private:
  Dims counts_;
  Dims dims_;
  std::vector<std::vector<index_t>> bounds_;
  std::size_t workers_ = 0;
};

/// Total replicated factor rows under the all-reduce scheme:
/// sum_k I_k * (P / N_k).
std::uint64_t grid_storage(const Dims& counts, const Dims& dims);

/// Grid with product P minimizing grid_storage over every ordered tuple of
/// divisors with N_k <= I_k; ties go to the lexicographically smallest tuple.
/// Throws ConfigError when no admissible tuple exists.
ProcessorGrid grid_factorization(std::size_t workers, const Dims& dims);

/// A worker's share of the tensor: local coordinates relative to `origin`.
struct WorkerBlock {
  std::size_t rank = 0;
  Dims origin;
  Dims extent;
  SparseTensor tensor;
  std::vector<std::size_t> source_entries;  // position of each entry in x
};

/// Assigns every nonzero to the block containing it, preserving entry order.
std::vector<WorkerBlock> partition_tensor(const SparseTensor& x, const ProcessorGrid& grid);

struct SampleShare {
  std::size_t nonzero = 0;
  std::size_t zero = 0;
  friend bool operator==(const SampleShare&, const SampleShare&) = default;
};

/// Near-even split of `total` over `parts`, remainder to the lowest indices.
std::vector<std::size_t> split_count(std::size_t total, std::size_t parts);

/// Per-worker sample counts for p nonzero and q zero samples.
std::vector<SampleShare> allocate_samples(std::size_t nonzero, std::size_t zero,
                                          std::size_t workers);

}  // namespace gcp
