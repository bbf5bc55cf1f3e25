#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace asmf {

// One reported problem. `code` is a stable machine-readable identifier
// (e.g. "E_PARSE", "E_UNRESOLVED"); `message` is for humans. Line/column are
// 1-based; 0 means "no position".
struct Diagnostic {
  std::string code;
  std::string message;
  uint32_t line = 0;
  uint32_t column = 0;

  std::string str() const {
    std::string out;
    if (line > 0) {
      out += std::to_string(line);
      out += ':';
      out += std::to_string(column);
      out += ": ";
    }
    out += code;
    out += ": ";
    out += message;
    return out;
  }
};

inline std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    out += d.str();
    out += '\n';
  }
  return out;
}

} // namespace asmf
