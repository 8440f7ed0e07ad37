#include "gcp/frostt.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "gcp/error.hpp"

namespace gcp {

namespace {

std::string coord_text(std::span<const index_t> c) {
  std::string s = "(";
  for (std::size_t k = 0; k < c.size(); ++k) s += (k ? "," : "") + std::to_string(c[k] + 1);
  return s + ")";
}

struct KeyHash {
  std::size_t operator()(const std::vector<index_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) h = (h ^ x) * 1099511628211ULL;
    return h;
  }
};

}  // namespace

SparseTensor parse_frostt(std::istream& in, const std::optional<Dims>& dims) {
  std::size_t d = dims ? dims->size() : 0;
  std::vector<index_t> coords;
  std::vector<double> values;
  std::unordered_map<std::vector<index_t>, std::size_t, KeyHash> seen;
  std::string raw;
  std::size_t line = 0;
  std::vector<std::string> tokens;
  std::vector<index_t> c;
  while (std::getline(in, raw)) {
    ++line;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#') continue;
    tokens.clear();
    std::istringstream ls(raw);
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (d == 0) {
      if (tokens.size() < 2) throw ParseError("expected indices followed by a value", line);
      d = tokens.size() - 1;
    }
    if (tokens.size() != d + 1)
      throw ParseError("expected " + std::to_string(d) + " indices and a value, found " +
                           std::to_string(tokens.size()) + " fields",
                       line);
    c.assign(d, 0);
    for (std::size_t k = 0; k < d; ++k) {
      const auto& t = tokens[k];
      unsigned long long v = 0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParseError("invalid index '" + t + "' in mode " + std::to_string(k + 1), line);
      if (v < 1) throw ParseError("index below 1 in mode " + std::to_string(k + 1), line);
      if (dims && v > (*dims)[k])
        throw ParseError("index " + t + " exceeds dimension " + std::to_string((*dims)[k]) +
                             " of mode " + std::to_string(k + 1),
                         line);
      c[k] = static_cast<index_t>(v - 1);
    }
    const auto& vt = tokens[d];
    char* end = nullptr;
    const double value = std::strtod(vt.c_str(), &end);
    if (end != vt.c_str() + vt.size()) throw ParseError("invalid value '" + vt + "'", line);
    if (!std::isfinite(value)) throw ParseError("non-finite value '" + vt + "'", line);
    if (value == 0.0) throw ParseError("explicit zero value", line);
    const auto [it, inserted] = seen.emplace(c, line);
    if (!inserted)
      throw ParseError("duplicate coordinate " + coord_text(c) + " (first on line " +
                           std::to_string(it->second) + ")",
                       line);
    coords.insert(coords.end(), c.begin(), c.end());
    values.push_back(value);
  }
  if (in.bad()) throw IoError("read error while parsing tensor");
  if (d == 0) throw ParseError("no entries and no dims given", 0);
  Dims out_dims = dims.value_or(Dims(d, 0));
  if (!dims)
    for (std::size_t e = 0; e < values.size(); ++e)
      for (std::size_t k = 0; k < d; ++k) out_dims[k] = std::max(out_dims[k], coords[e * d + k] + 1);
  return SparseTensor(std::move(out_dims), std::move(coords), std::move(values));
}

SparseTensor load_frostt(const std::string& path, const std::optional<Dims>& dims) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tensor file '" + path + "'");
  try {
    return parse_frostt(in, dims);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void write_frostt(std::ostream& out, const SparseTensor& x) {
  const auto old = out.precision(17);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    for (auto i : x.coords(e)) out << i + 1 << ' ';
    out << x.value(e) << '\n';
  }
  out.precision(old);
}

void save_frostt(const std::string& path, const SparseTensor& x) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_frostt(out, x);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Dims parse_dims(const std::string& text) {
  Dims dims;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ConfigError("malformed dims '" + text + "' (expected e.g. 300x200x100)");
    index_t v = 0;
    const auto [ptr, ec] = std::from_chars(cur.data(), cur.data() + cur.size(), v);
    if (ec != std::errc() || ptr != cur.data() + cur.size() || v == 0)
      throw ConfigError("malformed dims '" + text + "' (expected positive integers)");
    dims.push_back(v);
    cur.clear();
  };
  for (char ch : text) {
    if (ch == 'x' || ch == 'X' || ch == ',')
      flush();
    else
      cur += ch;
  }
  flush();
  return dims;
}

}  // namespace gcp
