#include "gcp/annealing.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "gcp/error.hpp"

namespace gcp {

void EpochConfig::validate() const {
  if (epochs == 0) throw ConfigError("epoch count must be positive");
  if (iters_per_epoch == 0) throw ConfigError("iterations per epoch must be positive");
  if (max_fails == 0) throw ConfigError("max fails must be positive");
  if (objective_nonzeros + objective_zeros == 0)
    throw ConfigError("loss estimation needs at least one nonzero or zero sample");
}

void Trace::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "epoch,iter,est_loss,rate,elapsed_s\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.iter << ',' << r.est_loss << ',' << r.rate << ',' << r.elapsed_s
        << '\n';
  out.precision(old_precision);
}

void Trace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trace file '" + path + "' for writing");
  write_csv(out);
  if (!out) throw IoError("failed writing trace file '" + path + "'");
}

Clock steady_clock_since_now() {
  const auto start = std::chrono::steady_clock::now();
  return [start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
}

namespace {

double safe_estimate(Solver& solver) {
  try {
    const double loss = solver.estimate_loss();
    return std::isnan(loss) ? std::numeric_limits<double>::infinity() : loss;
  } catch (const NumericError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

AnnealResult run_annealed_epochs(Solver& solver, const EpochConfig& cfg, double decay,
                                 const Clock& clock) {
  cfg.validate();
  if (!(decay >= 0.0 && decay <= 1.0)) throw ConfigError("decay must lie in [0, 1]");
  const auto now = [&] { return clock ? clock() : 0.0; };

  AnnealResult result;
  result.best_loss = solver.estimate_loss();
  solver.checkpoint();
  result.trace.rows.push_back({0, 0, result.best_loss, solver.rate(), now(), true});

  std::uint64_t iter = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    solver.begin_epoch(epoch);
    const double rate = solver.rate();
    for (std::size_t i = 0; i < cfg.iters_per_epoch; ++i) solver.iterate(iter++);
    const double loss = safe_estimate(solver);
    const bool accepted = loss < result.best_loss;
    if (accepted) {
      result.best_loss = loss;
      solver.checkpoint();
    } else {
      solver.restore();
      solver.scale_rate(decay);
      ++result.fails;
    }
    result.trace.rows.push_back({epoch, iter, loss, rate, now(), accepted});
    result.epochs_run = epoch;
    if (result.fails >= cfg.max_fails) break;
  }
  result.iterations = iter;
  return result;
}

}  // namespace gcp
