#include "gcp/loss.hpp"

#include <cmath>
#include <vector>

#include "gcp/error.hpp"
#include "gcp/mttkrp.hpp"
#include "gcp/sampler.hpp"

namespace gcp {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "gaussian" || name == "normal") return LossKind::gaussian;
  if (name == "poisson") return LossKind::poisson;
  throw ConfigError("unknown loss '" + name + "' (expected gaussian|poisson)");
}

std::string to_string(LossKind kind) { return kind == LossKind::poisson ? "poisson" : "gaussian"; }

namespace {

void check_inputs(const LossFunction& loss, double x, double m) {
  if (!std::isfinite(x) || !std::isfinite(m))
    throw NumericError("non-finite loss input (x=" + std::to_string(x) + ", m=" + std::to_string(m) + ")");
  if (loss.kind == LossKind::poisson && m + loss.epsilon_shift <= 0.0)
    throw NumericError("Poisson loss requires m > -shift, got m=" + std::to_string(m));
}

}  // namespace

double LossFunction::value(double x, double m) const {
  check_inputs(*this, x, m);
  if (kind == LossKind::gaussian) {
    const double r = x - m;
    return r * r;
  }
  return x == 0.0 ? m : m - x * std::log(m + epsilon_shift);
}

double LossFunction::deriv(double x, double m) const {
  check_inputs(*this, x, m);
  if (kind == LossKind::gaussian) return 2.0 * (m - x);
  return 1.0 - x / (m + epsilon_shift);
}

namespace {

void check_oracle_size(const SparseTensor& x) {
  if (x.total_entries() > kOracleEntryLimit)
    throw ConfigError("dense enumeration of " + std::to_string(x.total_entries()) +
                      " entries exceeds the oracle limit of " + std::to_string(kOracleEntryLimit));
}

/// Visits every multi-index in lexicographic order with its data value.
template <class Visit>
void for_each_entry(const SparseTensor& x, Visit&& visit) {
  check_oracle_size(x);
  const std::size_t d = x.ndims();
  std::vector<double> dense(x.total_entries(), 0.0);
  for (std::size_t e = 0; e < x.nnz(); ++e) dense[x.linear_index(x.coords(e))] = x.value(e);
  std::vector<index_t> c(d, 0);
  for (std::uint64_t lin = 0; lin < dense.size(); ++lin) {
    visit(std::span<const index_t>(c), dense[lin]);
    for (std::size_t k = d; k-- > 0;) {
      if (++c[k] < x.dims()[k]) break;
      c[k] = 0;
    }
  }
}

void check_conforming(const SparseTensor& x, const KruskalModel& model) {
  if (!model.conforms(x.dims()))
    throw ShapeError("tensor dims " + to_string(x.dims()) + " do not match model dims " +
                     to_string(model.dims()));
}

}  // namespace

double full_loss(const SparseTensor& x, const KruskalModel& model, const LossFunction& loss) {
  check_conforming(x, model);
  double total = 0.0;
  for_each_entry(x, [&](std::span<const index_t> c, double xi) {
    total += loss.value(xi, model.entry_unchecked(c));
  });
  return total;
}

double exact_loss(const SparseTensor& x, const KruskalModel& model, const LossFunction& loss) {
  check_conforming(x, model);
  const std::size_t d = model.ndims();
  const index_t rank = model.rank();
  double zero_part = 0.0;
  double correction = 0.0;
  if (loss.kind == LossKind::poisson) {
    // sum over all entries of m = sum_r prod_k colsum_k(r)
    for (index_t r = 0; r < rank; ++r) {
      double prod = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        auto a = model.factor(k);
        double s = 0.0;
        for (index_t i = 0; i < a.rows(); ++i) s += a(i, r);
        prod *= s;
      }
      zero_part += prod;
    }
  } else {
    // sum over all entries of m^2 = sum_{r,s} prod_k (A_k^T A_k)(r,s)
    std::vector<double> gram(rank * rank, 1.0);
    for (std::size_t k = 0; k < d; ++k) {
      auto a = model.factor(k);
      for (index_t r = 0; r < rank; ++r)
        for (index_t s = 0; s < rank; ++s) {
          double dot = 0.0;
          for (index_t i = 0; i < a.rows(); ++i) dot += a(i, r) * a(i, s);
          gram[r * rank + s] *= dot;
        }
    }
    for (double g : gram) zero_part += g;
  }
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const double m = model.entry_unchecked(x.coords(e));
    correction += loss.value(x.value(e), m) - loss.value(0.0, m);
  }
  return zero_part + correction;
}

double estimated_loss(const SparseTensor& x, const KruskalModel& model, const LossFunction& loss,
                      std::size_t fnz, std::size_t fz, RngStream rng,
                      std::span<const index_t> origin, std::size_t rejection_cap) {
  if (fnz > 0 && x.nnz() == 0)
    throw SamplingError("cannot draw nonzero loss samples from a tensor with no nonzeros", 0);
  if (fz > 0 && x.nnz() == x.total_entries())
    throw SamplingError("tensor has no zero entries for loss samples", 0);
  if (origin.empty()) check_conforming(x, model);

  double nonzero_sum = 0.0;
  double zero_sum = 0.0;
  std::vector<index_t> c(x.ndims());
  if (fnz > 0) {
    const SlotDrawer drawer(x, rng, false, rejection_cap);
    for (std::size_t s = 0; s < fnz; ++s) {
      const auto e = drawer.draw_nonzero(s, c);
      nonzero_sum += loss.value(x.value(e), model.entry_unchecked(c, origin));
    }
  }
  if (fz > 0) {
    const SlotDrawer drawer(x, rng, true, rejection_cap);
    for (std::size_t s = 0; s < fz; ++s) {
      drawer.draw_zero(s, c);
      zero_sum += loss.value(0.0, model.entry_unchecked(c, origin));
    }
  }
  double estimate = 0.0;
  if (fnz > 0) estimate += static_cast<double>(x.nnz()) / static_cast<double>(fnz) * nonzero_sum;
  if (fz > 0)
    estimate += static_cast<double>(x.total_entries() - x.nnz()) / static_cast<double>(fz) * zero_sum;
  return estimate;
}

namespace {

SampledGradientTensor dense_gradient_tensor(const SparseTensor& x, const KruskalModel& model,
                                            const LossFunction& loss) {
  check_conforming(x, model);
  SampledGradientTensor y(x.dims(), static_cast<std::size_t>(x.total_entries()), 0);
  for_each_entry(x, [&](std::span<const index_t> c, double xi) {
    y.push_back(c, loss.deriv(xi, model.entry_unchecked(c)));
  });
  return y;
}

}  // namespace

KruskalModel dense_gradient_oracle(const SparseTensor& x, const KruskalModel& model,
                                   const LossFunction& loss, std::size_t mode) {
  if (mode >= model.ndims())
    throw IndexError("mode " + std::to_string(mode) + " out of range for a " +
                     std::to_string(model.ndims()) + "-way model");
  return mttkrp(dense_gradient_tensor(x, model, loss), model, mode);
}

KruskalModel dense_gradient_oracle(const SparseTensor& x, const KruskalModel& model,
                                   const LossFunction& loss) {
  return mttkrp_all(dense_gradient_tensor(x, model, loss), model);
}

}  // namespace gcp
