#include "gcp/ledger.hpp"

#include <fstream>
#include <ostream>

#include "gcp/error.hpp"

namespace gcp {

LedgerRow CommLedger::totals() const {
  LedgerRow t;
  for (const auto& r : rows_) {
    t.scalars_reduced += r.scalars_reduced;
    t.rows_imported += r.rows_imported;
    t.rows_exported += r.rows_exported;
    t.setup_msgs += r.setup_msgs;
  }
  return t;
}

void CommLedger::write_csv(std::ostream& out) const {
  out << "iter,mode,scalars_reduced,rows_imported,rows_exported,setup_msgs\n";
  for (const auto& r : rows_)
    out << r.iter << ',' << r.mode << ',' << r.scalars_reduced << ',' << r.rows_imported << ','
        << r.rows_exported << ',' << r.setup_msgs << '\n';
}

void CommLedger::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open ledger file '" + path + "' for writing");
  write_csv(out);
  if (!out) throw IoError("failed writing ledger file '" + path + "'");
}

}  // namespace gcp
