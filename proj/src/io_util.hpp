#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <string>

#include "symgn/errors.hpp"

namespace symgn::detail {

/// Shortest-but-exact decimal for a double: 17 significant digits round-trip
/// every IEEE-754 binary64 value.
inline std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += g17(values[i]);
  }
  out += ']';
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace symgn::detail
