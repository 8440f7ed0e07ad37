#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcp/adam.hpp"
#include "gcp/annealing.hpp"
#include "gcp/lhs.hpp"
#include "gcp/loss.hpp"
#include "gcp/sampler.hpp"
#include "gcp/sparse_tensor.hpp"

namespace gcp {

enum class StudyMethod { gcp_sgd, gcp_fedadam };

std::string to_string(StudyMethod method);

/// One run of one method at one design point from one starting point. The
/// seed is shared by both methods for the same (stage, sample, start).
struct TrialSpec {
  std::size_t stage = 0;
  std::size_t sample = 0;
  std::size_t start = 0;
  StudyMethod method = StudyMethod::gcp_sgd;
  std::vector<double> params;  // aligned with the parameter space
  std::uint64_t seed = 0;
};

struct TrialOutcome {
  bool ok = true;
  double final_loss = 0.0;
  double seconds = 0.0;
  std::string error;
};

using TrialRunner = std::function<TrialOutcome(const TrialSpec&, const ParamSpace&)>;

struct StudyConfig {
  std::size_t initial_samples = 0;  // 0 selects 2 * number of parameters
  std::size_t starts = 1;
  std::size_t stages = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrialRecord {
  TrialSpec spec;
  TrialOutcome outcome;
  double rel_error = 0.0;  // relative to the global minimum; NaN for failed runs
};

struct CorrelationRow {
  std::size_t stage = 0;
  StudyMethod method = StudyMethod::gcp_sgd;
  std::string param;
  std::optional<double> coefficient;  // nullopt: no signal (constant ranks)
  std::size_t points = 0;
};

struct StudyReport {
  ParamSpace space;
  std::vector<std::size_t> stage_samples;
  std::vector<TrialRecord> trials;
  std::vector<CorrelationRow> correlations;
  double global_min = 0.0;
  std::size_t failures = 0;

  /// Coefficient for (stage, method, param); nullopt when absent or no signal.
  std::optional<double> coefficient(std::size_t stage, StudyMethod method,
                                    const std::string& param) const;

  /// Per-trial CSV: stage,sample,start,method,<params...>,ok,final_loss,rel_error,seconds
  void write_trials_csv(std::ostream& out) const;
  /// Per-parameter coefficients: stage,method,param,spearman,points
  void write_summary_csv(std::ostream& out) const;
};

/// Relative error floor for a zero minimum.
inline constexpr double kRelativeErrorFloor = 1e-12;

/// Staged LHS study. Stage t uses s * 2^t design points; every point runs both
/// methods from `starts` starting points. After all stages the relative error
/// of every successful run against the global minimum is computed and
/// Spearman coefficients are reported per stage, method and parameter.
/// Failed runs are counted and left out of the correlations.
StudyReport run_study(const ParamSpace& space, const StudyConfig& cfg, const TrialRunner& runner);

/// Fixture and fixed settings for the GCP trial runner.
struct GcpTrialFixture {
  SparseTensor tensor;
  LossFunction loss;
  index_t rank = 1;
  SamplerConfig sampler{SamplingScheme::stratified, 1, 1};
  EpochConfig epochs;
  std::size_t workers = 1;
  /// When set, every starting model is scaled to this full-model sum.
  std::optional<double> init_total;
};

/// Runner that executes synchronous GCP-Adam or FedAdam on the fixture and
/// reports the best estimated loss. Parameters missing from the space keep
/// their defaults.
TrialRunner make_gcp_trial_runner(GcpTrialFixture fixture);

}  // namespace gcp
