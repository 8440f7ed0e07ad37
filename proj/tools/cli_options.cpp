#include "cli_options.hpp"

#include <algorithm>
#include <numeric>

#include "CLI11.hpp"
#include "gcp/error.hpp"
#include "gcp/frostt.hpp"
#include "gcp/sampler.hpp"

namespace gcp::cli {

namespace {

const std::vector<std::string> kOnOff{"on", "off"};

std::size_t pick(const std::optional<std::size_t>& own, const std::optional<std::size_t>& twin,
                 std::size_t fallback) {
  if (own) return *own;
  if (twin) return *twin;
  return fallback;
}

}  // namespace

void add_tensor_flags(CLI::App& app, TensorSource& src) {
  auto* input = app.add_option("--input", src.input, "FROSTT coordinate file");
  app.add_option("--dims", src.dims, "Tensor dims, e.g. 300x200x100 (overrides inference)");
  auto* synth = app.add_option("--synthetic", src.synthetic, "Generate a synthetic tensor with these dims");
  input->excludes(synth);
  app.add_option("--synthetic-rank", src.synthetic_rank, "Rank of the generating model")
      ->check(CLI::PositiveNumber);
  app.add_option("--density", src.density, "Target fraction of stored entries")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--boost", src.boost, "Multiplier for boosted factor entries")->check(CLI::PositiveNumber);
  app.add_option("--boost-fraction", src.boost_fraction, "Probability that a factor entry is boosted")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--noise", src.noise, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
  app.add_option("--tensor-out", src.tensor_out, "Write the tensor as a FROSTT file");
}

void add_run_flags(CLI::App& app, RunFlags& f) {
  app.add_option("--rank", f.rank, "Decomposition rank")->check(CLI::PositiveNumber);
  app.add_option("--loss", f.loss, "gaussian|poisson")->check(CLI::IsMember({"gaussian", "poisson"}));
  app.add_option("--sampling", f.sampling, "stratified|semi-stratified")
      ->check(CLI::IsMember({"stratified", "semi-stratified"}));
  app.add_option("--fused", f.fused, "Fused sampling and MTTKRP: on|off")->check(CLI::IsMember(kOnOff));
  app.add_option("--search", f.search, "Nonzero index: sorted|hashmap")
      ->check(CLI::IsMember({"sorted", "hashmap"}));
  app.add_option("--gnzs", f.gnzs, "Nonzero gradient samples per iteration");
  app.add_option("--gzs", f.gzs, "Zero gradient samples per iteration");
  app.add_option("--fnzs", f.fnzs, "Nonzero samples for the loss estimate");
  app.add_option("--fzs", f.fzs, "Zero samples for the loss estimate");
  app.add_option("--seed", f.seed, "Seed for every random stream");
  app.add_option("--epochs", f.epochs, "Epoch budget")->check(CLI::PositiveNumber);
  app.add_option("--epoch-iters", f.epoch_iters, "Iterations per epoch")->check(CLI::PositiveNumber);
  app.add_option("--rate", f.rate, "Adam step size")->check(CLI::PositiveNumber);
  app.add_option("--decay", f.decay, "Rate multiplier after a rejected epoch")->check(CLI::Range(0.0, 1.0));
  app.add_option("--adam-beta1", f.beta1, "First moment decay");
  app.add_option("--adam-beta2", f.beta2, "Second moment decay");
  app.add_option("--adam-eps", f.eps, "Adam epsilon")->check(CLI::PositiveNumber);
  app.add_option("--max-fails", f.max_fails, "Rejected epochs before stopping")->check(CLI::PositiveNumber);
  app.add_option("--init", f.init, "Starting model: mass|uniform")->check(CLI::IsMember({"mass", "uniform"}));
  app.add_option("--method", f.method, "sync|local-sgd|fedadam")
      ->check(CLI::IsMember({"sync", "local-sgd", "fedadam"}));
  app.add_option("--downpour-iters", f.downpour_iters, "Synchronization period in epochs")
      ->check(CLI::PositiveNumber);
  app.add_option("--meta-rate", f.meta_rate, "Server step size (defaults to --rate)");
  app.add_option("--workers", f.workers, "Simulated worker count")->check(CLI::PositiveNumber);
  app.add_option("--grid", f.grid, "Explicit processor grid, e.g. 2x2x1");
  app.add_option("--scheme", f.scheme, "all-reduce|two-sided")->check(CLI::IsMember({"all-reduce", "two-sided"}));
  app.add_option("--addressing", f.addressing, "per-worker|global")
      ->check(CLI::IsMember({"per-worker", "global"}));
  app.add_option("--execution", f.execution, "forward|reverse|threaded")
      ->check(CLI::IsMember({"forward", "reverse", "threaded"}));
  app.add_option("--timing", f.timing, "Record wall-clock seconds in the trace: on|off")
      ->check(CLI::IsMember(kOnOff));
  app.add_option("--trace", f.trace, "Write the convergence trace CSV");
  app.add_option("--model-out", f.model_out, "Write the final model");
}

void check_tensor_source(const TensorSource& src, LossKind loss, std::uint64_t seed) {
  if (src.input.empty() == src.synthetic.empty())
    throw ConfigError("give exactly one of --input or --synthetic");
  if (!src.dims.empty()) parse_dims(src.dims);
  if (!src.synthetic.empty()) {
    if (!src.dims.empty()) throw ConfigError("--dims applies only to --input");
    SyntheticSpec spec;
    spec.dims = parse_dims(src.synthetic);
    spec.rank = src.synthetic_rank;
    spec.loss = loss;
    spec.seed = seed;
    spec.density = src.density;
    spec.boost = src.boost;
    spec.boost_fraction = src.boost_fraction;
    spec.noise_sd = src.noise;
    spec.validate();
  }
}

LoadedTensor load_tensor(const TensorSource& src, LossKind loss, std::uint64_t seed, SearchMode search) {
  check_tensor_source(src, loss, seed);
  LoadedTensor out;
  if (!src.input.empty()) {
    std::optional<Dims> dims;
    if (!src.dims.empty()) dims = parse_dims(src.dims);
    out.tensor = load_frostt(src.input, dims);
  } else {
    SyntheticSpec spec;
    spec.dims = parse_dims(src.synthetic);
    spec.rank = src.synthetic_rank;
    spec.loss = loss;
    spec.seed = seed;
    spec.density = src.density;
    spec.boost = src.boost;
    spec.boost_fraction = src.boost_fraction;
    spec.noise_sd = src.noise;
    auto data = generate_synthetic(spec);
    out.tensor = std::move(data.tensor);
    out.truth = std::move(data.truth);
  }
  if (!src.tensor_out.empty()) save_frostt(src.tensor_out, out.tensor);
  out.tensor = build_nnz_index(std::move(out.tensor), search);
  return out;
}

RunPlan plan_run(const RunFlags& f) {
  RunPlan plan;
  plan.loss = LossFunction::make(parse_loss_kind(f.loss));
  plan.timing = f.timing == "on";

  auto& cfg = plan.sync;
  cfg.sampler = SamplerConfig(parse_sampling_scheme(f.sampling), pick(f.gnzs, f.gzs, 1),
                              pick(f.gzs, f.gnzs, 1), parse_search_mode(f.search));
  cfg.adam = AdamParams{f.rate, f.decay, f.beta1, f.beta2, f.eps};
  cfg.adam.validate();
  cfg.epochs = EpochConfig{f.epochs, f.epoch_iters, f.max_fails, pick(f.fnzs, f.fzs, 1), pick(f.fzs, f.fnzs, 1)};
  cfg.epochs.validate();
  cfg.seed = f.seed;
  cfg.topology.workers = f.workers;
  if (!f.grid.empty()) {
    cfg.topology.grid_counts = parse_dims(f.grid);
    const auto& counts = *cfg.topology.grid_counts;
    const std::size_t product =
        std::accumulate(counts.begin(), counts.end(), std::size_t{1}, std::multiplies<>());
    if (product != f.workers)
      throw ConfigError("--grid " + f.grid + " has " + std::to_string(product) + " workers but --workers is " +
                        std::to_string(f.workers));
  }
  cfg.topology.options.scheme = parse_distribution_scheme(f.scheme);
  cfg.topology.options.addressing = parse_sample_addressing(f.addressing);
  cfg.topology.options.execution = parse_execution_policy(f.execution);
  cfg.topology.options.fused = f.fused == "on";
  cfg.topology.options.validate(cfg.sampler);

  if (f.method != "sync") {
    if (cfg.topology.options.scheme != DistributionScheme::all_reduce)
      throw ConfigError("--scheme applies only to --method sync");
    if (cfg.topology.options.fused) throw ConfigError("--fused on applies only to --method sync");
    FederatedConfig fed;
    fed.method = parse_federated_method(f.method);
    fed.tau = f.downpour_iters;
    fed.meta_rate = f.meta_rate;
    fed.validate();
    plan.federated = fed;
  } else if (f.meta_rate) {
    throw ConfigError("--meta-rate applies only to --method fedadam");
  }
  if (plan.federated && plan.federated->method == FederatedMethod::local_sgd && f.meta_rate)
    throw ConfigError("--meta-rate applies only to --method fedadam");
  return plan;
}

void resolve_sample_counts(RunPlan& plan, const RunFlags& f, std::size_t nnz) {
  const std::size_t grad = std::max<std::size_t>(1, std::min<std::size_t>(nnz, 10000));
  const std::size_t objective = std::max<std::size_t>(1, std::min<std::size_t>(nnz, 100000));
  auto& s = plan.sync.sampler;
  s = SamplerConfig(s.scheme, pick(f.gnzs, f.gzs, grad), pick(f.gzs, f.gnzs, grad), s.search, s.rejection_cap);
  plan.sync.epochs.objective_nonzeros = pick(f.fnzs, f.fzs, objective);
  plan.sync.epochs.objective_zeros = pick(f.fzs, f.fnzs, objective);
  plan.sync.epochs.validate();
}

KruskalModel initial_model(const RunFlags& f, const SparseTensor& x) {
  auto model = random_model(x.dims(), f.rank, RngStream(f.seed, stream_purpose::init));
  if (f.init == "mass") {
    const double total = std::accumulate(x.values().begin(), x.values().end(), 0.0);
    if (!(total > 0.0)) throw ConfigError("--init mass needs a tensor with a positive value sum; use --init uniform");
    scale_to_total(model, total);
  }
  return model;
}

}  // namespace gcp::cli
