#include "gcp/adam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcp/error.hpp"

namespace gcp {

void AdamParams::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("rate must be positive");
  if (!(decay >= 0.0 && decay <= 1.0)) throw ConfigError("decay must lie in [0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
}

AdamState::AdamState(std::size_t coefficients, const AdamParams& params, double lower_bound)
    : params_(params),
      lower_bound_(lower_bound),
      first_(coefficients, 0.0),
      second_(coefficients, 0.0),
      rate_(params.rate) {
  params_.validate();
}

void AdamState::apply(std::span<double> coeffs, std::span<const double> grad, std::size_t begin,
                      std::size_t end) {
  if (coeffs.size() != first_.size() || grad.size() != first_.size())
    throw ShapeError("Adam state holds " + std::to_string(first_.size()) +
                     " coefficients, update has " + std::to_string(coeffs.size()) + " and " +
                     std::to_string(grad.size()));
  if (begin > end || end > first_.size()) throw ShapeError("Adam update range out of bounds");
  if (step_ == 0) throw ConfigError("Adam update applied before the step counter advanced");

  const double b1 = params_.beta1;
  const double b2 = params_.beta2;
  const double t = static_cast<double>(step_);
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);
  const double eps = params_.epsilon;
  const double alpha = rate_;
  const double lo = lower_bound_;
  double* a = coeffs.data();
  const double* g = grad.data();
  double* m1 = first_.data();
  double* m2 = second_.data();
  for (std::size_t i = begin; i < end; ++i) {
    m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
    m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m1[i] / bias1;
    const double vhat = m2[i] / bias2;
    a[i] = std::max(a[i] - alpha * mhat / std::sqrt(vhat + eps), lo);
  }
}

void adam_update(KruskalModel& model, const KruskalModel& grad, AdamState& state) {
  if (grad.dims() != model.dims() || grad.rank() != model.rank())
    throw ShapeError("gradient shape does not match the model");
  if (state.size() != model.size()) throw ShapeError("optimizer state does not match the model size");
  state.advance();
  state.apply(model.data(), grad.data(), 0, model.size());
}

void sync_sgd_iteration(KruskalModel& model, std::span<const KruskalModel> worker_grads,
                        AdamState& state) {
  if (worker_grads.empty()) throw ConfigError("synchronous iteration received no worker gradients");
  KruskalModel total(model.dims(), model.rank());
  auto acc = total.data();
  for (const auto& g : worker_grads) {
    if (g.dims() != model.dims() || g.rank() != model.rank())
      throw ShapeError("worker gradient shape does not match the model");
    auto src = g.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
  }
  adam_update(model, total, state);
}

}  // namespace gcp
