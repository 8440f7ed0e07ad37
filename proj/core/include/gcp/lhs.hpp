#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcp/rng.hpp"

namespace gcp {

/// How a parameter's unit-interval position maps to its value.
///   linear:   lower + u (upper - lower)
///   log10:    10^(log10 lower + u (log10 upper - log10 lower))
///   log2_int: round(2^(log2 lower + u (log2 upper - log2 lower))), an
///             integer on a log-spaced grid
enum class ParamScale { linear, log10, log2_int };

enum class ParamScope { both, fedadam_only };

ParamScale parse_param_scale(const std::string& name);
std::string to_string(ParamScale scale);

struct ParamSpec {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  ParamScale scale = ParamScale::linear;
  ParamScope scope = ParamScope::both;

  /// Throws ConfigError unless lower < upper (and both positive for log scales).
  void validate() const;
  /// Value at unit position u in [0, 1).
  double value_at(double u) const;
};

struct ParamSpace {
  std::vector<ParamSpec> params;

  void validate() const;
  std::size_t size() const noexcept { return params.size(); }
  /// Index of `name`; throws ConfigError when absent.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;
};

/// The tuning ranges used for the GCP-Adam and FedAdam study.
ParamSpace default_param_space();

/// Reads `name: lower,upper,scale[,fedadam]` lines; `#` starts a comment.
/// Throws ParseError with the line number on malformed input.
ParamSpace parse_param_space(std::istream& in);
ParamSpace load_param_space(const std::string& path);

/// s x d design. unit(s, j) is the pre-transform position in [0, 1) and
/// stratum(s, j) = floor(s * unit(s, j)).
struct LhsDesign {
  std::size_t samples = 0;
  std::size_t params = 0;
  std::vector<double> unit;
  std::vector<double> values;
  std::vector<std::size_t> strata;

  double unit_at(std::size_t s, std::size_t j) const { return unit[s * params + j]; }
  double value(std::size_t s, std::size_t j) const { return values[s * params + j]; }
  std::size_t stratum(std::size_t s, std::size_t j) const { return strata[s * params + j]; }

  friend bool operator==(const LhsDesign&, const LhsDesign&) = default;
};

/// Latin hypercube design: each parameter's strata are randomly permuted and
/// a uniform point is drawn inside each stratum. When `decorrelate` is set
/// and samples > params, the stratum orders are rearranged (Iman-Conover) so
/// that rank correlations between parameters are near zero; the
/// one-per-stratum property is unaffected. Throws ConfigError if samples is 0.
LhsDesign lhs_generate(const ParamSpace& space, std::size_t samples, RngStream rng,
                       bool decorrelate = true);

}  // namespace gcp
