#include "gcp/sparse_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gcp/error.hpp"

namespace gcp {

std::uint64_t total_entries(const Dims& dims) {
  if (dims.empty()) throw ShapeError("tensor must have at least one mode");
  std::uint64_t total = 1;
  for (auto n : dims) {
    if (n == 0) throw ShapeError("tensor dimensions must be positive: " + to_string(dims));
    if (total > std::numeric_limits<std::uint64_t>::max() / n)
      throw ShapeError("total entry count overflows 64 bits: " + to_string(dims));
    total *= n;
  }
  return total;
}

std::string to_string(const Dims& dims) {
  std::ostringstream os;
  for (std::size_t k = 0; k < dims.size(); ++k) os << (k ? "x" : "") << dims[k];
  return os.str();
}

SearchMode parse_search_mode(const std::string& name) {
  if (name == "sorted") return SearchMode::sorted;
  if (name == "hashmap" || name == "hash") return SearchMode::hashmap;
  throw ConfigError("unknown search mode '" + name + "' (expected sorted|hashmap)");
}

SparseTensor::SparseTensor(Dims dims) : dims_(std::move(dims)), total_(gcp::total_entries(dims_)) {}

SparseTensor::SparseTensor(Dims dims, std::vector<index_t> coords, std::vector<double> values)
    : SparseTensor(std::move(dims)) {
  if (coords.size() != values.size() * dims_.size())
    throw ShapeError("coordinate array size does not match value count");
  coords_ = std::move(coords);
  values_ = std::move(values);
  for (std::size_t e = 0; e < values_.size(); ++e) {
    check_coords(this->coords(e));
    if (!std::isfinite(values_[e]))
      throw NumericError("non-finite value at entry " + std::to_string(e));
  }
}

void SparseTensor::check_coords(std::span<const index_t> coords) const {
  if (coords.size() != dims_.size())
    throw IndexError("coordinate has " + std::to_string(coords.size()) + " modes, tensor has " +
                     std::to_string(dims_.size()));
  for (std::size_t k = 0; k < coords.size(); ++k)
    if (coords[k] >= dims_[k])
      throw IndexError("index " + std::to_string(coords[k]) + " out of range for mode " +
                       std::to_string(k) + " of size " + std::to_string(dims_[k]));
}

void SparseTensor::push_back(std::span<const index_t> coords, double value) {
  check_coords(coords);
  if (!std::isfinite(value)) throw NumericError("non-finite tensor value");
  coords_.insert(coords_.end(), coords.begin(), coords.end());
  values_.push_back(value);
  mode_ = SearchMode::none;
  sorted_keys_.clear();
  hash_.clear();
}

void SparseTensor::reserve(std::size_t nnz) {
  coords_.reserve(nnz * dims_.size());
  values_.reserve(nnz);
}

std::uint64_t SparseTensor::linear_index(std::span<const index_t> coords) const noexcept {
  std::uint64_t key = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) key = key * dims_[k] + coords[k];
  return key;
}

std::vector<std::size_t> SparseTensor::build_index(SearchMode mode) {
  const std::size_t n = nnz();
  const std::size_t d = ndims();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  sorted_keys_.clear();
  hash_.clear();
  mode_ = SearchMode::none;

  std::vector<std::uint64_t> keys(n);
  for (std::size_t e = 0; e < n; ++e) keys[e] = linear_index(coords(e));

  auto duplicate = [&](std::size_t e) {
    std::ostringstream os;
    os << "duplicate coordinate (";
    for (std::size_t k = 0; k < d; ++k) os << (k ? "," : "") << coords(e)[k];
    os << ") at entry " << e;
    return IndexError(os.str());
  };

  switch (mode) {
    case SearchMode::none:
      return perm;
    case SearchMode::sorted: {
      std::stable_sort(perm.begin(), perm.end(),
                       [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
      for (std::size_t i = 1; i < n; ++i)
        if (keys[perm[i]] == keys[perm[i - 1]]) throw duplicate(perm[i]);
      std::vector<index_t> c(coords_.size());
      std::vector<double> v(n);
      sorted_keys_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(coords_.begin() + perm[i] * d, d, c.begin() + i * d);
        v[i] = values_[perm[i]];
        sorted_keys_[i] = keys[perm[i]];
      }
      coords_ = std::move(c);
      values_ = std::move(v);
      break;
    }
    case SearchMode::hashmap: {
      hash_.reserve(n);
      for (std::size_t e = 0; e < n; ++e)
        if (!hash_.emplace(keys[e], e).second) throw duplicate(e);
      break;
    }
  }
  mode_ = mode;
  return perm;
}

std::optional<std::size_t> SparseTensor::find(std::span<const index_t> coords) const {
  const auto key = linear_index(coords);
  switch (mode_) {
    case SearchMode::sorted: {
      auto it = std::lower_bound(sorted_keys_.begin(), sorted_keys_.end(), key);
      if (it != sorted_keys_.end() && *it == key)
        return static_cast<std::size_t>(it - sorted_keys_.begin());
      return std::nullopt;
    }
    case SearchMode::hashmap: {
      auto it = hash_.find(key);
      if (it != hash_.end()) return it->second;
      return std::nullopt;
    }
    case SearchMode::none:
      break;
  }
  throw ConfigError("membership query on a tensor without a nonzero index");
}

SampledGradientTensor::SampledGradientTensor(Dims dims, std::size_t nonzero_samples,
                                             std::size_t zero_samples)
    : dims_(std::move(dims)), p_(nonzero_samples), q_(zero_samples) {
  coords_.reserve((p_ + q_) * dims_.size());
  values_.reserve(p_ + q_);
}

void SampledGradientTensor::push_back(std::span<const index_t> coords, double value) {
  coords_.insert(coords_.end(), coords.begin(), coords.end());
  values_.push_back(value);
}

}  // namespace gcp
