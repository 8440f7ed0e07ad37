#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace gcp {

struct EpochConfig {
  std::size_t epochs = 1000;
  std::size_t iters_per_epoch = 100;
  std::size_t max_fails = 3;
  std::size_t objective_nonzeros = 0;  // fnz
  std::size_t objective_zeros = 0;     // fz

  /// Throws ConfigError unless epochs, iters_per_epoch and max_fails are
  /// positive and fnz + fz > 0.
  void validate() const;
};

/// One line of the convergence trace. Epoch 0 is the starting point.
struct TraceRow {
  std::size_t epoch = 0;
  std::uint64_t iter = 0;    // iterations completed so far
  double est_loss = 0.0;
  double rate = 0.0;         // rate in effect while the epoch ran
  double elapsed_s = 0.0;
  bool accepted = true;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct Trace {
  std::vector<TraceRow> rows;

  /// Writes `epoch,iter,est_loss,rate,elapsed_s` with round-trip precision.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Anything the epoch driver can optimize.
class Solver {
 public:
  virtual ~Solver() = default;

  /// Called before the iterations of epoch `epoch` (1-based).
  virtual void begin_epoch(std::size_t /*epoch*/) {}
  /// Runs iteration `iter`; `iter` is global and never rewinds.
  virtual void iterate(std::uint64_t iter) = 0;
  virtual double estimate_loss() = 0;
  virtual void checkpoint() = 0;
  virtual void restore() = 0;
  virtual void scale_rate(double factor) = 0;
  virtual double rate() const = 0;
};

/// Seconds since the run started. An empty clock records zero.
using Clock = std::function<double()>;

/// Wall clock anchored at construction time.
Clock steady_clock_since_now();

struct AnnealResult {
  Trace trace;
  std::size_t epochs_run = 0;
  std::size_t fails = 0;
  std::uint64_t iterations = 0;
  double best_loss = 0.0;
};

/// Epoch loop with checkpointing and rate decay. Each epoch runs
/// iters_per_epoch iterations and then estimates the loss. A strictly smaller
/// loss is accepted and checkpointed; otherwise the checkpoint is restored,
/// the rate is multiplied by `decay` and a failure is counted. The loop ends
/// once max_fails failures have occurred or the epoch budget is spent. A
/// numeric failure while estimating the loss counts as a rejected epoch.
AnnealResult run_annealed_epochs(Solver& solver, const EpochConfig& cfg, double decay,
                                 const Clock& clock = {});

}  // namespace gcp
