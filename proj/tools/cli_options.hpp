#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "gcp/federated.hpp"
#include "gcp/gcp_adam.hpp"
#include "gcp/loss.hpp"
#include "gcp/sparse_tensor.hpp"
#include "gcp/synthetic.hpp"

namespace CLI {
class App;
}

namespace gcp::cli {

/// Where the tensor comes from: a coordinate file or the synthetic generator.
struct TensorSource {
  std::string input;
  std::string dims;
  std::string synthetic;
  index_t synthetic_rank = 5;
  double density = 0.01;
  double boost = 10.0;
  double boost_fraction = 0.1;
  double noise = 1.0;
  std::string tensor_out;
};

/// Every flag that shapes a decomposition run.
struct RunFlags {
  index_t rank = 5;
  std::string loss = "poisson";
  std::string sampling = "stratified";
  std::string fused = "off";
  std::string search = "hashmap";
  std::optional<std::size_t> gnzs, gzs, fnzs, fzs;
  std::uint64_t seed = 0;
  std::size_t epochs = 20;
  std::size_t epoch_iters = 100;
  double rate = 1e-3;
  double decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t max_fails = 3;
  std::string init = "mass";
  std::string method = "sync";
  std::size_t downpour_iters = 1;
  std::optional<double> meta_rate;
  std::size_t workers = 1;
  std::string grid;
  std::string scheme = "all-reduce";
  std::string addressing = "per-worker";
  std::string execution = "forward";
  std::string timing = "off";
  std::string trace;
  std::string model_out;
};

void add_tensor_flags(CLI::App& app, TensorSource& src);
void add_run_flags(CLI::App& app, RunFlags& flags);

/// Loaded or generated tensor (with its nonzero index) and, for synthetic
/// data, the generating model.
struct LoadedTensor {
  SparseTensor tensor;
  std::optional<KruskalModel> truth;
};

/// Throws ConfigError when neither or both sources are given.
void check_tensor_source(const TensorSource& src, LossKind loss, std::uint64_t seed);
LoadedTensor load_tensor(const TensorSource& src, LossKind loss, std::uint64_t seed, SearchMode search);

/// Fully validated settings derived from RunFlags.
struct RunPlan {
  LossFunction loss;
  GcpAdamConfig sync;
  std::optional<FederatedConfig> federated;
  bool timing = false;
};

/// Validates every flag combination without touching data, so a bad
/// configuration fails before any work starts. Sample counts that depend on
/// the tensor are filled in by resolve_sample_counts.
RunPlan plan_run(const RunFlags& flags);

/// Defaults: p = q = min(nnz, 10000) and fnz = fz = min(nnz, 100000); a
/// single given count of a pair is used for both.
void resolve_sample_counts(RunPlan& plan, const RunFlags& flags, std::size_t nnz);

/// Random starting model; with --init mass it is scaled so the full model
/// sums to the sum of the tensor's values.
KruskalModel initial_model(const RunFlags& flags, const SparseTensor& x);

}  // namespace gcp::cli
