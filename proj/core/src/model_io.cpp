#include "gcp/model_io.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "gcp/error.hpp"

namespace gcp {

void write_model(std::ostream& out, const KruskalModel& model) {
  const auto old = out.precision(17);
  out << "kruskal " << model.ndims() << '\n';
  for (std::size_t k = 0; k < model.ndims(); ++k) out << (k ? " " : "") << model.dims()[k];
  out << '\n' << model.rank() << '\n';
  for (std::size_t k = 0; k < model.ndims(); ++k) {
    const auto f = model.factor(k);
    for (index_t i = 0; i < f.rows(); ++i) {
      for (index_t r = 0; r < f.cols(); ++r) out << (r ? " " : "") << f(i, r);
      out << '\n';
    }
  }
  out.precision(old);
}

void save_model(const std::string& path, const KruskalModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file '" + path + "' for writing");
  write_model(out, model);
  if (!out) throw IoError("failed writing model file '" + path + "'");
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& token) {
    while (!(line_stream_ >> token)) {
      std::string raw;
      if (!std::getline(in_, raw)) return false;
      ++line_;
      line_stream_.clear();
      line_stream_.str(raw);
    }
    return true;
  }

  std::string require(const char* what) {
    std::string t;
    if (!next(t)) throw ParseError(std::string("truncated model: missing ") + what, line_);
    return t;
  }

  std::size_t count(const char* what) {
    const auto t = require(what);
    char* end = nullptr;
    const auto v = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || t[0] == '-') throw ParseError(std::string("invalid ") + what + " '" + t + "'", line_);
    return static_cast<std::size_t>(v);
  }

  double real(const char* what) {
    const auto t = require(what);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw ParseError(std::string("invalid ") + what + " '" + t + "'", line_);
    return v;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::istringstream line_stream_;
  std::size_t line_ = 0;
};

}  // namespace

KruskalModel read_model(std::istream& in) {
  TokenReader reader(in);
  if (reader.require("header") != "kruskal") throw ParseError("model file must start with 'kruskal'", reader.line());
  const std::size_t d = reader.count("order");
  if (d == 0) throw ParseError("model order must be positive", reader.line());
  Dims dims(d);
  for (auto& n : dims) n = reader.count("dimension");
  const std::size_t rank = reader.count("rank");
  KruskalModel model;
  try {
    model = KruskalModel(dims, rank);
  } catch (const Error& e) {
    throw ParseError(e.what(), reader.line());
  }
  for (auto& v : model.data()) v = reader.real("coefficient");
  std::string extra;
  if (reader.next(extra)) throw ParseError("unexpected trailing data '" + extra + "'", reader.line());
  return model;
}

KruskalModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  try {
    return read_model(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

}  // namespace gcp
