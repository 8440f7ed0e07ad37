#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gcp {

/// Communication counted for one mode of one iteration, summed over workers.
struct LedgerRow {
  std::uint64_t iter = 0;
  std::size_t mode = 0;
  std::uint64_t scalars_reduced = 0;
  std::uint64_t rows_imported = 0;
  std::uint64_t rows_exported = 0;
  std::uint64_t setup_msgs = 0;

  friend bool operator==(const LedgerRow&, const LedgerRow&) = default;
};

class CommLedger {
 public:
  void record(const LedgerRow& row) { rows_.push_back(row); }
  const std::vector<LedgerRow>& rows() const noexcept { return rows_; }
  void clear() { rows_.clear(); }

  /// Column sums over every recorded row (iter and mode are left zero).
  LedgerRow totals() const;

  /// Writes `iter,mode,scalars_reduced,rows_imported,rows_exported,setup_msgs`.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;

  friend bool operator==(const CommLedger&, const CommLedger&) = default;

 private:
  std::vector<LedgerRow> rows_;
};

}  // namespace gcp
