#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>

#include "CLI11.hpp"
#include "cli_options.hpp"
#include "gcp/error.hpp"
#include "gcp/frostt.hpp"
#include "gcp/lhs.hpp"
#include "gcp/model_io.hpp"
#include "gcp/study.hpp"

using namespace gcp;
using namespace gcp::cli;

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void describe(const LoadedTensor& data, const LossFunction& loss) {
  std::printf("tensor %s nnz %zu\n", to_string(data.tensor.dims()).c_str(), data.tensor.nnz());
  if (data.truth)
    std::printf("loss at generating model %.10g\n", exact_loss(data.tensor, *data.truth, loss));
}

void report_anneal(const AnnealResult& r) {
  std::printf("epochs %zu iterations %llu rejected %zu\n", r.epochs_run,
              static_cast<unsigned long long>(r.iterations), r.fails);
  std::printf("best estimated loss %.10g\n", r.best_loss);
  if (!r.trace.rows.empty()) std::printf("final rate %.6g\n", r.trace.rows.back().rate);
}

struct RunOutputs {
  KruskalModel model;
  AnnealResult anneal;
  std::optional<CommLedger> ledger;
};

RunOutputs run(const TensorSource& src, const RunFlags& flags, bool quiet_tensor = false) {
  auto plan = plan_run(flags);
  auto data = load_tensor(src, plan.loss.kind, flags.seed, plan.sync.sampler.search);
  resolve_sample_counts(plan, flags, data.tensor.nnz());
  if (!quiet_tensor) describe(data, plan.loss);
  const auto model0 = initial_model(flags, data.tensor);
  const Clock clock = plan.timing ? steady_clock_since_now() : Clock{};

  RunOutputs out;
  if (plan.federated) {
    const auto grid = make_topology_grid(plan.sync.topology, data.tensor.dims());
    auto r = run_federated(data.tensor, model0, plan.loss, plan.sync.sampler, plan.sync.adam, plan.sync.epochs,
                           *plan.federated, grid, plan.sync.seed, clock);
    std::printf("synchronizations %zu\n", r.synchronizations);
    out = {std::move(r.model), std::move(r.anneal), std::nullopt};
  } else {
    auto r = run_gcp_adam(data.tensor, model0, plan.loss, plan.sync, clock);
    out = {std::move(r.model), std::move(r.anneal), std::move(r.ledger)};
  }
  report_anneal(out.anneal);
  std::printf("exact loss of final model %.10g\n", exact_loss(data.tensor, out.model, plan.loss));
  if (!flags.trace.empty()) out.anneal.trace.write_csv(flags.trace);
  if (!flags.model_out.empty()) save_model(flags.model_out, out.model);
  return out;
}

struct TuneFlags {
  std::string space;
  std::size_t stages = 2;
  std::size_t samples = 0;
  std::size_t starts = 1;
  std::string report;
  std::string summary;
};

void tune(const TensorSource& src, const RunFlags& flags, const TuneFlags& t) {
  const ParamSpace space = t.space.empty() ? default_param_space() : load_param_space(t.space);
  StudyConfig study{t.samples, t.starts, t.stages, flags.seed};
  study.validate();
  auto plan = plan_run(flags);
  auto data = load_tensor(src, plan.loss.kind, flags.seed, plan.sync.sampler.search);
  resolve_sample_counts(plan, flags, data.tensor.nnz());
  describe(data, plan.loss);

  std::optional<double> init_total;
  if (flags.init == "mass") {
    (void)initial_model(flags, data.tensor);  // rejects a nonpositive value sum
    init_total = std::accumulate(data.tensor.values().begin(), data.tensor.values().end(), 0.0);
  }
  GcpTrialFixture fixture{std::move(data.tensor), plan.loss,  flags.rank,
                          plan.sync.sampler,      plan.sync.epochs, flags.workers, init_total};
  const auto report = run_study(space, study, make_gcp_trial_runner(std::move(fixture)));
  std::printf("trials %zu failures %zu global minimum %.10g\n", report.trials.size(), report.failures,
              report.global_min);
  std::printf("%-6s %-12s %-22s %10s %7s\n", "stage", "method", "param", "spearman", "points");
  for (const auto& row : report.correlations) {
    const std::string coef = row.coefficient ? std::to_string(*row.coefficient) : "n/a";
    std::printf("%-6zu %-12s %-22s %10s %7zu\n", row.stage, to_string(row.method).c_str(), row.param.c_str(),
                coef.c_str(), row.points);
  }
  if (!t.report.empty()) {
    auto out = open_output(t.report);
    report.write_trials_csv(out);
  }
  if (!t.summary.empty()) {
    auto out = open_output(t.summary);
    report.write_summary_csv(out);
  }
}

struct VerifyFlags {
  std::string model;
  std::string loss = "poisson";
  std::uint64_t seed = 0;
  std::size_t fnzs = 100000;
  std::size_t fzs = 100000;
};

void verify(const TensorSource& src, const VerifyFlags& v) {
  const auto loss = LossFunction::make(parse_loss_kind(v.loss));
  auto data = load_tensor(src, loss.kind, v.seed, SearchMode::hashmap);
  const auto model = load_model(v.model);
  describe(data, loss);
  std::printf("model %s rank %llu\n", to_string(model.dims()).c_str(),
              static_cast<unsigned long long>(model.rank()));
  std::printf("exact loss %.10g\n", exact_loss(data.tensor, model, loss));
  const std::size_t n = data.tensor.nnz();
  const std::size_t zeros = data.tensor.total_entries() - n;
  std::printf("estimated loss %.10g\n",
              estimated_loss(data.tensor, model, loss, n == 0 ? 0 : v.fnzs, zeros == 0 ? 0 : v.fzs,
                             objective_stream(v.seed, 0)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse generalized CP decomposition with stochastic gradients"};
  app.require_subcommand(1);

  TensorSource src;
  RunFlags run_flags;

  auto* decompose = app.add_subcommand("decompose", "Fit a model with GCP-Adam or a federated method");
  add_tensor_flags(*decompose, src);
  add_run_flags(*decompose, run_flags);

  RunFlags sim_flags;
  sim_flags.workers = 4;
  std::string ledger_path;
  auto* simulate = app.add_subcommand("simulate", "Run on a simulated cluster and record communication");
  add_tensor_flags(*simulate, src);
  add_run_flags(*simulate, sim_flags);
  simulate->add_option("--ledger", ledger_path, "Write the communication ledger CSV");

  RunFlags tune_run;
  tune_run.epochs = 5;
  tune_run.workers = 4;
  TuneFlags tune_flags;
  auto* tune_cmd = app.add_subcommand("tune", "Latin hypercube hyperparameter study with rank correlations");
  add_tensor_flags(*tune_cmd, src);
  add_run_flags(*tune_cmd, tune_run);
  tune_cmd->add_option("--space", tune_flags.space, "Parameter space file (name: lower,upper,scale[,fedadam])");
  tune_cmd->add_option("--stages", tune_flags.stages, "Refinement stages")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--samples", tune_flags.samples, "Design points in the first stage (default 2 per parameter)");
  tune_cmd->add_option("--starts", tune_flags.starts, "Starting points per design point")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--report", tune_flags.report, "Write the per-trial CSV");
  tune_cmd->add_option("--summary", tune_flags.summary, "Write the per-parameter coefficient CSV");

  VerifyFlags verify_flags;
  auto* verify_cmd = app.add_subcommand("verify", "Evaluate a saved model against a tensor");
  add_tensor_flags(*verify_cmd, src);
  verify_cmd->add_option("--model", verify_flags.model, "Model file")->required();
  verify_cmd->add_option("--loss", verify_flags.loss, "gaussian|poisson")
      ->check(CLI::IsMember({"gaussian", "poisson"}));
  verify_cmd->add_option("--seed", verify_flags.seed, "Seed for the loss estimate and synthetic data");
  verify_cmd->add_option("--fnzs", verify_flags.fnzs, "Nonzero samples for the loss estimate");
  verify_cmd->add_option("--fzs", verify_flags.fzs, "Zero samples for the loss estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCategory::usage);
  }

  try {
    if (*decompose) {
      run(src, run_flags);
    } else if (*simulate) {
      if (!ledger_path.empty() && sim_flags.method != "sync")
        throw ConfigError("--ledger applies only to --method sync");
      const auto out = run(src, sim_flags);
      if (out.ledger) {
        const auto t = out.ledger->totals();
        std::printf("ledger scalars_reduced %llu rows_imported %llu rows_exported %llu setup_msgs %llu\n",
                    static_cast<unsigned long long>(t.scalars_reduced),
                    static_cast<unsigned long long>(t.rows_imported),
                    static_cast<unsigned long long>(t.rows_exported), static_cast<unsigned long long>(t.setup_msgs));
        if (!ledger_path.empty()) out.ledger->write_csv(ledger_path);
      }
    } else if (*tune_cmd) {
      tune(src, tune_run, tune_flags);
    } else if (*verify_cmd) {
      verify(src, verify_flags);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "gcp: error: %s\n", e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gcp: internal error: %s\n", e.what());
    return exit_code(ErrorCategory::internal);
  }
  return 0;
}
