#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcp/rng.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

/// Row-major I_k x R view into a factor matrix.
template <class T>
class BasicFactorView {
 public:
  BasicFactorView(T* data, index_t rows, index_t cols) noexcept
      : data_(data), rows_(rows), cols_(cols) {}

  index_t rows() const noexcept { return rows_; }
  index_t cols() const noexcept { return cols_; }
  T& operator()(index_t i, index_t r) const noexcept { return data_[i * cols_ + r]; }
  std::span<T> row(index_t i) const noexcept { return {data_ + i * cols_, cols_}; }
  std::span<T> data() const noexcept { return {data_, rows_ * cols_}; }

 private:
  T* data_;
  index_t rows_;
  index_t cols_;
};

using FactorView = BasicFactorView<double>;
using ConstFactorView = BasicFactorView<const double>;

/// Rank-R Kruskal tensor. All factor matrices live in one contiguous array;
/// factor k starts at offset(k) and is stored row-major. The same type holds
/// gradients, which have identical shape.
class KruskalModel {
 public:
  KruskalModel() = default;
  KruskalModel(Dims dims, index_t rank, double fill = 0.0);

  index_t rank() const noexcept { return rank_; }
  std::size_t ndims() const noexcept { return dims_.size(); }
  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::size_t offset(std::size_t mode) const noexcept { return offsets_[mode]; }

  FactorView factor(std::size_t mode) noexcept {
    return {data_.data() + offsets_[mode], dims_[mode], rank_};
  }
  ConstFactorView factor(std::size_t mode) const noexcept {
    return {data_.data() + offsets_[mode], dims_[mode], rank_};
  }

  /// Model value at `coords`. Throws IndexError when out of range.
  double entry(std::span<const index_t> coords) const;

  /// Model value at `coords` + `origin` (origin may be empty). No bounds checks.
  double entry_unchecked(std::span<const index_t> coords,
                         std::span<const index_t> origin = {}) const noexcept {
    const std::size_t d = dims_.size();
    double sum = 0.0;
    for (index_t r = 0; r < rank_; ++r) {
      double prod = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        const index_t i = origin.empty() ? coords[k] : coords[k] + origin[k];
        prod *= data_[offsets_[k] + i * rank_ + r];
      }
      sum += prod;
    }
    return sum;
  }

  bool conforms(const Dims& dims) const noexcept { return dims == dims_; }

  /// Throws NumericError if any coefficient is NaN or infinite.
  void check_finite() const;

  void fill(double value);

  friend bool operator==(const KruskalModel&, const KruskalModel&) = default;

 private:
  Dims dims_;
  index_t rank_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// Free-function spelling of KruskalModel::entry.
inline double model_entry(const KruskalModel& model, std::span<const index_t> coords) {
  return model.entry(coords);
}

/// Model with i.i.d. uniform [lo, hi) coefficients drawn from `rng`.
KruskalModel random_model(const Dims& dims, index_t rank, RngStream rng, double lo = 0.0,
                          double hi = 1.0);

/// Sum of every entry of the full model: sum_r prod_k (column sum of factor k).
double model_total(const KruskalModel& model);

/// Multiplies every factor by (target / model_total)^(1/d) so the full model
/// sums to `target`. Throws NumericError unless both totals are positive.
void scale_to_total(KruskalModel& model, double target);

/// Copies, for every mode k, rows [origin[k], origin[k] + extent[k]) into a
/// new model of shape `extent`.
KruskalModel extract_block(const KruskalModel& model, std::span<const index_t> origin,
                           const Dims& extent);

}  // namespace gcp
