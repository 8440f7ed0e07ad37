#include "gcp/lhs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gcp/error.hpp"

namespace gcp {

ParamScale parse_param_scale(const std::string& name) {
  if (name == "linear") return ParamScale::linear;
  if (name == "log10" || name == "log") return ParamScale::log10;
  if (name == "log2_int" || name == "log2-int") return ParamScale::log2_int;
  throw ConfigError("unknown parameter scale '" + name + "' (expected linear|log10|log2_int)");
}

std::string to_string(ParamScale scale) {
  switch (scale) {
    case ParamScale::linear: return "linear";
    case ParamScale::log10: return "log10";
    case ParamScale::log2_int: return "log2_int";
  }
  return "linear";
}

void ParamSpec::validate() const {
  if (name.empty()) throw ConfigError("parameter without a name");
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
    throw ConfigError("parameter '" + name + "' needs finite bounds with lower < upper");
  if (scale != ParamScale::linear && !(lower > 0.0))
    throw ConfigError("log-scaled parameter '" + name + "' needs positive bounds");
}

double ParamSpec::value_at(double u) const {
  switch (scale) {
    case ParamScale::linear:
      return lower + u * (upper - lower);
    case ParamScale::log10: {
      const double a = std::log10(lower);
      const double b = std::log10(upper);
      return std::pow(10.0, a + u * (b - a));
    }
    case ParamScale::log2_int: {
      const double a = std::log2(lower);
      const double b = std::log2(upper);
      return std::clamp(std::round(std::exp2(a + u * (b - a))), std::ceil(lower), std::floor(upper));
    }
  }
  return lower;
}

void ParamSpace::validate() const {
  if (params.empty()) throw ConfigError("parameter space is empty");
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].validate();
    for (std::size_t j = 0; j < i; ++j)
      if (params[j].name == params[i].name)
        throw ConfigError("parameter '" + params[i].name + "' listed twice");
  }
}

std::size_t ParamSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  throw ConfigError("parameter space has no '" + name + "'");
}

bool ParamSpace::contains(const std::string& name) const {
  return std::any_of(params.begin(), params.end(), [&](const ParamSpec& p) { return p.name == name; });
}

ParamSpace default_param_space() {
  using S = ParamScale;
  using P = ParamScope;
  return ParamSpace{{
      {"rate", std::pow(10.0, -5.5), std::pow(10.0, -0.5), S::log10, P::both},
      {"decay", std::pow(10.0, -3.5), std::pow(10.0, -0.5), S::log10, P::both},
      {"adam-beta1", 0.0, 1.0, S::linear, P::both},
      {"adam-beta2", 0.9, 0.99999, S::linear, P::both},
      {"adam-eps", 1e-16, 1e-10, S::log10, P::both},
      {"meta-rate", std::pow(10.0, -5.5), std::pow(10.0, -0.5), S::log10, P::fedadam_only},
      {"downpour-iterations", 1.0, 256.0, S::log2_int, P::fedadam_only},
  }};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_bound(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("invalid bound '" + text + "'", line);
  }
}

}  // namespace

ParamSpace parse_param_space(std::istream& in) {
  ParamSpace space;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("expected 'name: lower,upper,scale'", line);
    ParamSpec spec;
    spec.name = trim(text.substr(0, colon));
    std::vector<std::string> fields;
    std::stringstream rest(text.substr(colon + 1));
    for (std::string f; std::getline(rest, f, ',');) fields.push_back(trim(f));
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError("expected 'name: lower,upper,scale[,fedadam]'", line);
    spec.lower = parse_bound(fields[0], line);
    spec.upper = parse_bound(fields[1], line);
    try {
      spec.scale = parse_param_scale(fields[2]);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line);
    }
    if (fields.size() == 4) {
      if (fields[3] == "fedadam")
        spec.scope = ParamScope::fedadam_only;
      else if (fields[3] != "both")
        throw ParseError("unknown scope '" + fields[3] + "' (expected both|fedadam)", line);
    }
    try {
      spec.validate();
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line);
    }
    space.params.push_back(spec);
  }
  space.validate();
  return space;
}

ParamSpace load_param_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open parameter space file '" + path + "'");
  return parse_param_space(in);
}

namespace {

/// Reorders each column's strata so the design's rank correlation matrix is
/// close to the identity.
void decorrelate_strata(std::vector<std::size_t>& strata, std::size_t s, std::size_t d) {
  Eigen::MatrixXd scores(s, d);
  const double centre = (static_cast<double>(s) - 1.0) / 2.0;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < d; ++j)
      scores(i, j) = static_cast<double>(strata[i * d + j]) - centre;
  Eigen::MatrixXd cov = scores.transpose() * scores / static_cast<double>(s);
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  const Eigen::MatrixXd corr = sd.asDiagonal().inverse() * cov * sd.asDiagonal().inverse();
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) return;
  const Eigen::MatrixXd lower = llt.matrixL();
  const Eigen::MatrixXd adjusted =
      lower.triangularView<Eigen::Lower>().solve(scores.transpose()).transpose();
  std::vector<std::size_t> order(s);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return adjusted(a, j) < adjusted(b, j); });
    for (std::size_t r = 0; r < s; ++r) strata[order[r] * d + j] = r;
  }
}

}  // namespace

LhsDesign lhs_generate(const ParamSpace& space, std::size_t samples, RngStream rng, bool decorrelate) {
  space.validate();
  if (samples == 0) throw ConfigError("a Latin hypercube needs at least one sample");
  const std::size_t d = space.size();
  LhsDesign design;
  design.samples = samples;
  design.params = d;
  design.strata.assign(samples * d, 0);
  std::vector<double> offset(samples * d, 0.0);
  std::vector<std::size_t> perm(samples);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = samples; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < samples; ++i) {
      design.strata[i * d + j] = perm[i];
      offset[i * d + j] = rng.uniform();
    }
  }
  if (decorrelate && d >= 2 && samples > d) decorrelate_strata(design.strata, samples, d);
  design.unit.resize(samples * d);
  design.values.resize(samples * d);
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double u = (static_cast<double>(design.strata[i * d + j]) + offset[i * d + j]) /
                       static_cast<double>(samples);
      design.unit[i * d + j] = std::min(u, std::nextafter(1.0, 0.0));
      design.values[i * d + j] = space.params[j].value_at(design.unit[i * d + j]);
    }
  return design;
}

}  // namespace gcp
