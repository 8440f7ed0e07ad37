#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gcp {

using index_t = std::size_t;
using Dims = std::vector<index_t>;

/// Number of entries in a dense tensor of shape `dims`. Throws ShapeError if
/// any dimension is zero or the product overflows 64 bits.
std::uint64_t total_entries(const Dims& dims);

std::string to_string(const Dims& dims);

/// How stored coordinates are searched when sampling zeros.
enum class SearchMode { none, sorted, hashmap };

SearchMode parse_search_mode(const std::string& name);

/// d-way sparse tensor in coordinate format. Coordinates are 0-based and
/// stored row-wise (entry e occupies coords_[e*d .. e*d+d)).
class SparseTensor {
 public:
  SparseTensor() = default;
  explicit SparseTensor(Dims dims);
  SparseTensor(Dims dims, std::vector<index_t> coords, std::vector<double> values);

  /// Appends one entry. Drops any previously built index.
  void push_back(std::span<const index_t> coords, double value);
  void reserve(std::size_t nnz);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t ndims() const noexcept { return dims_.size(); }
  std::size_t nnz() const noexcept { return values_.size(); }
  std::uint64_t total_entries() const noexcept { return total_; }

  std::span<const index_t> coords(std::size_t e) const noexcept {
    return {coords_.data() + e * dims_.size(), dims_.size()};
  }
  double value(std::size_t e) const noexcept { return values_[e]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const index_t> coord_data() const noexcept { return coords_; }

  /// Lexicographic linear index (mode 0 slowest). Requires in-range coords.
  std::uint64_t linear_index(std::span<const index_t> coords) const noexcept;

  /// Builds the membership index. `sorted` reorders the entries into strict
  /// lexicographic order; the returned permutation maps new entry positions
  /// to old ones. Throws IndexError on duplicate coordinates.
  std::vector<std::size_t> build_index(SearchMode mode);

  SearchMode index_mode() const noexcept { return mode_; }

  /// Position of the entry stored at `coords`, if any. Requires an index.
  std::optional<std::size_t> find(std::span<const index_t> coords) const;
  bool contains(std::span<const index_t> coords) const { return find(coords).has_value(); }

  /// Entry-by-entry equality (dims, order, values).
  friend bool operator==(const SparseTensor& a, const SparseTensor& b) {
    return a.dims_ == b.dims_ && a.coords_ == b.coords_ && a.values_ == b.values_;
  }

 private:
  void check_coords(std::span<const index_t> coords) const;

  Dims dims_;
  std::vector<index_t> coords_;
  std::vector<double> values_;
  std::uint64_t total_ = 0;

  SearchMode mode_ = SearchMode::none;
  std::vector<std::uint64_t> sorted_keys_;
  std::unordered_map<std::uint64_t, std::size_t> hash_;
};

/// Stochastic gradient tensor: exactly p+q weighted entries. Duplicate
/// coordinates are allowed; the first p entries are nonzero samples.
class SampledGradientTensor {
 public:
  SampledGradientTensor() = default;
  SampledGradientTensor(Dims dims, std::size_t nonzero_samples, std::size_t zero_samples);

  void push_back(std::span<const index_t> coords, double value);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t ndims() const noexcept { return dims_.size(); }
  std::size_t nnz() const noexcept { return values_.size(); }
  std::size_t nonzero_samples() const noexcept { return p_; }
  std::size_t zero_samples() const noexcept { return q_; }

  std::span<const index_t> coords(std::size_t e) const noexcept {
    return {coords_.data() + e * dims_.size(), dims_.size()};
  }
  double value(std::size_t e) const noexcept { return values_[e]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const SampledGradientTensor&, const SampledGradientTensor&) = default;

 private:
  Dims dims_;
  std::vector<index_t> coords_;
  std::vector<double> values_;
  std::size_t p_ = 0;
  std::size_t q_ = 0;
};

}  // namespace gcp
