#pragma once

#include <iosfwd>
#include <string>

#include "gcp/kruskal.hpp"

namespace gcp {

/// Text format: a header line `kruskal <d>`, a line with the d dims, a line
/// with the rank, then every factor's rows in order, one row per line, with
/// 17 significant digits so that reading back is bit exact.
void write_model(std::ostream& out, const KruskalModel& model);
void save_model(const std::string& path, const KruskalModel& model);

/// Throws ParseError for a bad header, a truncated body or trailing data.
KruskalModel read_model(std::istream& in);
KruskalModel load_model(const std::string& path);

}  // namespace gcp
