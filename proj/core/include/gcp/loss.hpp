#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "gcp/kruskal.hpp"
#include "gcp/rng.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

enum class LossKind { gaussian, poisson };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

/// Elementwise loss f(x, m).
///   gaussian: f = (x - m)^2,               df/dm = 2 (m - x)
///   poisson:  f = m - x log(m + shift),    df/dm = 1 - x / (m + shift)
/// `lower_bound` is the clamp applied to model coefficients after each
/// optimizer step (0 for Poisson, -inf for Gaussian by default).
struct LossFunction {
  LossKind kind = LossKind::gaussian;
  double epsilon_shift = 1e-10;
  double lower_bound = -std::numeric_limits<double>::infinity();

  static LossFunction gaussian() { return {LossKind::gaussian, 0.0, -std::numeric_limits<double>::infinity()}; }
  static LossFunction poisson(double shift = 1e-10) { return {LossKind::poisson, shift, 0.0}; }
  static LossFunction make(LossKind kind) { return kind == LossKind::poisson ? poisson() : gaussian(); }

  /// Throws NumericError for non-finite inputs or a Poisson model value at
  /// or below -shift.
  double value(double x, double m) const;
  double deriv(double x, double m) const;
};

inline double loss_value(double x, double m, const LossFunction& loss) { return loss.value(x, m); }
inline double loss_deriv(double x, double m, const LossFunction& loss) { return loss.deriv(x, m); }

/// Largest dense enumeration the oracle routines accept.
inline constexpr std::uint64_t kOracleEntryLimit = 1'000'000;

/// F(X, M) summed over every multi-index by enumeration. Test oracle; refuses
/// tensors with more than kOracleEntryLimit entries.
double full_loss(const SparseTensor& x, const KruskalModel& model, const LossFunction& loss);

/// F(X, M) without enumeration: the zero-entry sum is evaluated in closed form
/// (sum of m over all entries for Poisson, sum of m^2 for Gaussian), so the
/// cost is O(nnz R d + R^2 sum I_k).
double exact_loss(const SparseTensor& x, const KruskalModel& model, const LossFunction& loss);

/// Stratified Monte-Carlo estimate of F:
///   (N/fnz) sum_{nonzero samples} f(x_i, m_i) + ((M-N)/fz) sum_{zero samples} f(0, m_i)
/// Zero samples are found by rejection against the tensor's nonzero index,
/// which must be built when fz > 0. `origin` shifts tensor coordinates into
/// model coordinates (empty = none).
double estimated_loss(const SparseTensor& x, const KruskalModel& model, const LossFunction& loss,
                      std::size_t fnz, std::size_t fz, RngStream rng,
                      std::span<const index_t> origin = {}, std::size_t rejection_cap = 1000);

/// Dense gradient: y_i = df/dm(x_i, m_i) for ALL multi-indices (x_i = 0 when
/// not stored), followed by the mode-`mode` MTTKRP. Test oracle; refuses
/// tensors with more than kOracleEntryLimit entries.
KruskalModel dense_gradient_oracle(const SparseTensor& x, const KruskalModel& model,
                                   const LossFunction& loss, std::size_t mode);

/// All modes of the dense gradient in one model-shaped result.
KruskalModel dense_gradient_oracle(const SparseTensor& x, const KruskalModel& model,
                                   const LossFunction& loss);

}  // namespace gcp
