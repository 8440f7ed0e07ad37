#include "gcp/kruskal.hpp"

#include <algorithm>
#include <cmath>

#include "gcp/error.hpp"

namespace gcp {

KruskalModel::KruskalModel(Dims dims, index_t rank, double fill) : dims_(std::move(dims)), rank_(rank) {
  if (rank_ == 0) throw ShapeError("Kruskal model rank must be positive");
  (void)total_entries(dims_);  // validates dims
  offsets_.resize(dims_.size());
  std::size_t total = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    offsets_[k] = total;
    total += dims_[k] * rank_;
  }
  data_.assign(total, fill);
}

double KruskalModel::entry(std::span<const index_t> coords) const {
  if (coords.size() != dims_.size())
    throw IndexError("coordinate has " + std::to_string(coords.size()) + " modes, model has " +
                     std::to_string(dims_.size()));
  for (std::size_t k = 0; k < coords.size(); ++k)
    if (coords[k] >= dims_[k])
      throw IndexError("index " + std::to_string(coords[k]) + " out of range for mode " +
                       std::to_string(k) + " of size " + std::to_string(dims_[k]));
  return entry_unchecked(coords);
}

void KruskalModel::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw NumericError("non-finite model coefficient at flat offset " + std::to_string(i));
}

void KruskalModel::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

KruskalModel random_model(const Dims& dims, index_t rank, RngStream rng, double lo, double hi) {
  KruskalModel model(dims, rank);
  for (auto& v : model.data()) v = rng.uniform(lo, hi);
  return model;
}

double model_total(const KruskalModel& model) {
  std::vector<double> cols(model.rank(), 1.0);
  for (std::size_t k = 0; k < model.ndims(); ++k) {
    std::vector<double> sums(model.rank(), 0.0);
    const auto f = model.factor(k);
    for (index_t i = 0; i < f.rows(); ++i)
      for (index_t r = 0; r < model.rank(); ++r) sums[r] += f(i, r);
    for (index_t r = 0; r < model.rank(); ++r) cols[r] *= sums[r];
  }
  double total = 0.0;
  for (double c : cols) total += c;
  return total;
}

void scale_to_total(KruskalModel& model, double target) {
  const double current = model_total(model);
  if (!(current > 0.0) || !(target > 0.0) || !std::isfinite(current) || !std::isfinite(target))
    throw NumericError("model and target totals must be positive and finite");
  const double factor = std::pow(target / current, 1.0 / static_cast<double>(model.ndims()));
  for (auto& v : model.data()) v *= factor;
}

KruskalModel extract_block(const KruskalModel& model, std::span<const index_t> origin,
                           const Dims& extent) {
  KruskalModel block(extent, model.rank());
  for (std::size_t k = 0; k < extent.size(); ++k) {
    if (origin[k] + extent[k] > model.dims()[k]) throw IndexError("block exceeds model bounds");
    auto src = model.factor(k);
    auto dst = block.factor(k);
    std::copy_n(src.row(origin[k]).data(), extent[k] * model.rank(), dst.data().data());
  }
  return block;
}

}  // namespace gcp
