#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <string>

#include "gcp/error.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

/// Anything stored as a list of (coords, value) entries.
template <class T>
concept CoordinateTensor = requires(const T& t, std::size_t e) {
  { t.dims() } -> std::convertible_to<const Dims&>;
  { t.nnz() } -> std::convertible_to<std::size_t>;
  { t.coords(e) } -> std::convertible_to<std::span<const index_t>>;
  { t.value(e) } -> std::convertible_to<double>;
};

/// Adds y * prod_{k' != mode} A^(k')[coords[k'] + origin[k'], :] to `out_row`.
/// This is the single accumulation kernel shared by every MTTKRP path, so the
/// floating-point operation order is identical wherever it is used.
inline void accumulate_mttkrp_row(const KruskalModel& model, std::span<const index_t> coords,
                                  std::span<const index_t> origin, double y, std::size_t mode,
                                  double* out_row) noexcept {
  const std::size_t d = model.ndims();
  const index_t rank = model.rank();
  const double* a = model.data().data();
  for (index_t r = 0; r < rank; ++r) {
    double prod = y;
    for (std::size_t k = 0; k < d; ++k) {
      if (k == mode) continue;
      const index_t i = origin.empty() ? coords[k] : coords[k] + origin[k];
      prod *= a[model.offset(k) + i * rank + r];
    }
    out_row[r] += prod;
  }
}

namespace detail {

inline void check_mttkrp_args(const Dims& src_dims, const KruskalModel& model, std::size_t mode) {
  if (mode >= model.ndims())
    throw IndexError("mode " + std::to_string(mode) + " out of range for a " +
                     std::to_string(model.ndims()) + "-way model");
  if (!model.conforms(src_dims))
    throw ShapeError("tensor dims " + to_string(src_dims) + " do not match model dims " +
                     to_string(model.dims()));
}

}  // namespace detail

/// Mode-`mode` MTTKRP accumulated into `out` (I_k x R), which is overwritten.
/// Entries are visited in list order.
template <CoordinateTensor T>
void mttkrp(const T& src, const KruskalModel& model, std::size_t mode, FactorView out) {
  detail::check_mttkrp_args(src.dims(), model, mode);
  if (out.rows() != model.dims()[mode] || out.cols() != model.rank())
    throw ShapeError("mttkrp output has wrong shape");
  for (auto& v : out.data()) v = 0.0;
  const std::size_t n = src.nnz();
  for (std::size_t e = 0; e < n; ++e) {
    const auto c = src.coords(e);
    accumulate_mttkrp_row(model, c, {}, src.value(e), mode, out.row(c[mode]).data());
  }
}

/// Mode-`mode` MTTKRP returned as a fresh model-shaped gradient whose only
/// nonzero factor is `mode`.
template <CoordinateTensor T>
KruskalModel mttkrp(const T& src, const KruskalModel& model, std::size_t mode) {
  detail::check_mttkrp_args(src.dims(), model, mode);
  KruskalModel out(model.dims(), model.rank());
  mttkrp(src, model, mode, out.factor(mode));
  return out;
}

/// All d MTTKRPs at once; factor k of the result is the mode-k gradient.
template <CoordinateTensor T>
KruskalModel mttkrp_all(const T& src, const KruskalModel& model) {
  KruskalModel out(model.dims(), model.rank());
  for (std::size_t k = 0; k < model.ndims(); ++k) mttkrp(src, model, k, out.factor(k));
  return out;
}

}  // namespace gcp
