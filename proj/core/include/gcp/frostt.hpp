#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "gcp/sparse_tensor.hpp"

namespace gcp {

/// Reads coordinate text: one nonzero per line, d 1-based indices then a
/// value, whitespace separated; `#` lines and blank lines are skipped. Dims
/// are the per-mode maximum index unless `dims` is given. Throws ParseError
/// (with the line number) for malformed lines, indices below 1 or beyond
/// `dims`, non-finite or zero values and duplicate coordinates.
SparseTensor parse_frostt(std::istream& in, const std::optional<Dims>& dims = std::nullopt);
SparseTensor load_frostt(const std::string& path, const std::optional<Dims>& dims = std::nullopt);

/// Writes entries in stored order with 1-based indices and round-trip values.
void write_frostt(std::ostream& out, const SparseTensor& x);
void save_frostt(const std::string& path, const SparseTensor& x);

/// Parses "300x200x100" (or comma separated). Throws ConfigError.
Dims parse_dims(const std::string& text);

}  // namespace gcp
