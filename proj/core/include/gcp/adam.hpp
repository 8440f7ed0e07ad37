#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gcp/kruskal.hpp"

namespace gcp {

/// Adam hyperparameters. `rate` is the initial step size; `decay` multiplies
/// the rate after each rejected epoch.
struct AdamParams {
  double rate = 1e-3;
  double decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError unless rate > 0, 0 <= decay <= 1, 0 <= beta1 < 1,
  /// 0 <= beta2 < 1 and epsilon > 0.
  void validate() const;
};

/// Moment arrays congruent to a model's contiguous coefficient storage, the
/// step counter and the current rate.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t coefficients, const AdamParams& params,
            double lower_bound = -std::numeric_limits<double>::infinity());

  const AdamParams& params() const noexcept { return params_; }
  double lower_bound() const noexcept { return lower_bound_; }
  std::size_t size() const noexcept { return first_.size(); }

  std::span<double> first() noexcept { return first_; }
  std::span<const double> first() const noexcept { return first_; }
  std::span<double> second() noexcept { return second_; }
  std::span<const double> second() const noexcept { return second_; }

  std::uint64_t step() const noexcept { return step_; }
  double rate() const noexcept { return rate_; }
  void set_rate(double rate) noexcept { rate_ = rate; }

  /// Increments the step counter. Call once per update, before apply().
  void advance() noexcept { ++step_; }

  /// Applies the update for the current step to coefficients [begin, end) of
  /// `coeffs`, using `grad` at the same offsets. Both spans cover the full
  /// array. Throws ShapeError on length mismatch or a bad range and
  /// ConfigError if advance() was never called.
  void apply(std::span<double> coeffs, std::span<const double> grad, std::size_t begin,
             std::size_t end);

  friend bool operator==(const AdamState&, const AdamState&) = default;

 private:
  AdamParams params_;
  double lower_bound_ = -std::numeric_limits<double>::infinity();
  std::vector<double> first_;
  std::vector<double> second_;
  std::uint64_t step_ = 0;
  double rate_ = 0.0;
};

inline bool operator==(const AdamParams& a, const AdamParams& b) {
  return a.rate == b.rate && a.decay == b.decay && a.beta1 == b.beta1 && a.beta2 == b.beta2 &&
         a.epsilon == b.epsilon;
}

/// One Adam step over the whole contiguous array followed by the lower-bound
/// clamp. Throws ShapeError if model, gradient and state are not congruent.
void adam_update(KruskalModel& model, const KruskalModel& grad, AdamState& state);

/// Sums the worker gradients in worker-index order and applies one Adam step.
/// Throws ConfigError when no worker contributed and ShapeError on mismatch.
void sync_sgd_iteration(KruskalModel& model, std::span<const KruskalModel> worker_grads,
                        AdamState& state);

}  // namespace gcp
