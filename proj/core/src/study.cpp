#include "gcp/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include "gcp/cluster.hpp"
#include "gcp/error.hpp"
#include "gcp/federated.hpp"
#include "gcp/gcp_adam.hpp"
#include "gcp/spearman.hpp"

namespace gcp {

std::string to_string(StudyMethod method) {
  return method == StudyMethod::gcp_sgd ? "gcp-sgd" : "gcp-fedadam";
}

void StudyConfig::validate() const {
  if (starts == 0) throw ConfigError("a study needs at least one starting point");
  if (stages == 0) throw ConfigError("a study needs at least one stage");
}

std::optional<double> StudyReport::coefficient(std::size_t stage, StudyMethod method,
                                               const std::string& param) const {
  for (const auto& c : correlations)
    if (c.stage == stage && c.method == method && c.param == param) return c.coefficient;
  return std::nullopt;
}

void StudyReport::write_trials_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "stage,sample,start,method";
  for (const auto& p : space.params) out << ',' << p.name;
  out << ",ok,final_loss,rel_error,seconds\n";
  for (const auto& t : trials) {
    out << t.spec.stage << ',' << t.spec.sample << ',' << t.spec.start << ','
        << to_string(t.spec.method);
    for (double v : t.spec.params) out << ',' << v;
    out << ',' << (t.outcome.ok ? 1 : 0) << ',' << t.outcome.final_loss << ',' << t.rel_error << ','
        << t.outcome.seconds << '\n';
  }
  out.precision(old);
}

void StudyReport::write_summary_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "stage,method,param,spearman,points\n";
  for (const auto& c : correlations) {
    out << c.stage << ',' << to_string(c.method) << ',' << c.param << ',';
    if (c.coefficient)
      out << *c.coefficient;
    else
      out << "nan";
    out << ',' << c.points << '\n';
  }
  out.precision(old);
}

namespace {

constexpr std::uint64_t kDesignPurpose = 11;
constexpr StudyMethod kMethods[] = {StudyMethod::gcp_sgd, StudyMethod::gcp_fedadam};

}  // namespace

StudyReport run_study(const ParamSpace& space, const StudyConfig& cfg, const TrialRunner& runner) {
  space.validate();
  cfg.validate();
  if (!runner) throw ConfigError("study has no trial runner");
  StudyReport report;
  report.space = space;
  std::size_t s = cfg.initial_samples ? cfg.initial_samples : 2 * space.size();

  for (std::size_t stage = 0; stage < cfg.stages; ++stage, s *= 2) {
    report.stage_samples.push_back(s);
    const auto design = lhs_generate(space, s, RngStream(cfg.seed, stream_key({kDesignPurpose, stage})));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t start = 0; start < cfg.starts; ++start)
        for (auto method : kMethods) {
          TrialRecord rec;
          rec.spec.stage = stage;
          rec.spec.sample = i;
          rec.spec.start = start;
          rec.spec.method = method;
          rec.spec.params.assign(design.values.begin() + static_cast<std::ptrdiff_t>(i * space.size()),
                                 design.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * space.size()));
          rec.spec.seed = stream_key({cfg.seed, stage, i, start});
          try {
            rec.outcome = runner(rec.spec, space);
          } catch (const std::exception& e) {
            rec.outcome = {false, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()};
          }
          if (rec.outcome.ok && !std::isfinite(rec.outcome.final_loss)) {
            rec.outcome.ok = false;
            rec.outcome.error = "non-finite final loss";
          }
          report.trials.push_back(std::move(rec));
        }
  }

  report.global_min = std::numeric_limits<double>::infinity();
  for (const auto& t : report.trials) {
    if (t.outcome.ok)
      report.global_min = std::min(report.global_min, t.outcome.final_loss);
    else
      ++report.failures;
  }
  const double denom = std::max(std::abs(report.global_min), kRelativeErrorFloor);
  for (auto& t : report.trials)
    t.rel_error = t.outcome.ok ? (t.outcome.final_loss - report.global_min) / denom
                               : std::numeric_limits<double>::quiet_NaN();

  for (std::size_t stage = 0; stage < cfg.stages; ++stage)
    for (auto method : kMethods)
      for (std::size_t j = 0; j < space.size(); ++j) {
        std::vector<double> xs, ys;
        for (const auto& t : report.trials)
          if (t.spec.stage == stage && t.spec.method == method && t.outcome.ok) {
            xs.push_back(t.spec.params[j]);
            ys.push_back(t.rel_error);
          }
        CorrelationRow row{stage, method, space.params[j].name, std::nullopt, xs.size()};
        if (xs.size() >= 2) row.coefficient = spearman_rank_correlation(xs, ys);
        report.correlations.push_back(row);
      }
  return report;
}

namespace {

double param_or(const TrialSpec& spec, const ParamSpace& space, const std::string& name,
                double fallback) {
  return space.contains(name) ? spec.params[space.index_of(name)] : fallback;
}

}  // namespace

TrialRunner make_gcp_trial_runner(GcpTrialFixture fixture) {
  auto fx = std::make_shared<GcpTrialFixture>(std::move(fixture));
  if (fx->tensor.index_mode() == SearchMode::none) fx->tensor.build_index(fx->sampler.search);
  return [fx](const TrialSpec& spec, const ParamSpace& space) {
    const auto t0 = std::chrono::steady_clock::now();
    AdamParams adam;
    adam.rate = param_or(spec, space, "rate", adam.rate);
    adam.decay = param_or(spec, space, "decay", adam.decay);
    adam.beta1 = param_or(spec, space, "adam-beta1", adam.beta1);
    adam.beta2 = param_or(spec, space, "adam-beta2", adam.beta2);
    adam.epsilon = param_or(spec, space, "adam-eps", adam.epsilon);
    auto model0 = random_model(fx->tensor.dims(), fx->rank, RngStream(spec.seed, stream_purpose::init));
    if (fx->init_total) scale_to_total(model0, *fx->init_total);
    TrialOutcome out;
    if (spec.method == StudyMethod::gcp_sgd) {
      GcpAdamConfig cfg;
      cfg.sampler = fx->sampler;
      cfg.adam = adam;
      cfg.epochs = fx->epochs;
      cfg.seed = spec.seed;
      cfg.topology.workers = fx->workers;
      out.final_loss = run_gcp_adam(fx->tensor, model0, fx->loss, cfg).anneal.best_loss;
    } else {
      FederatedConfig fed;
      fed.method = FederatedMethod::fedadam;
      fed.meta_rate = param_or(spec, space, "meta-rate", adam.rate);
      fed.tau = static_cast<std::size_t>(param_or(spec, space, "downpour-iterations", 1.0));
      const auto grid = grid_factorization(fx->workers, fx->tensor.dims());
      out.final_loss = run_federated(fx->tensor, model0, fx->loss, fx->sampler, adam, fx->epochs,
                                     fed, grid, spec.seed)
                           .anneal.best_loss;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  };
}

}  // namespace gcp
