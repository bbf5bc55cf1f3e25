#include "asmf/value.hpp"

namespace asmf {

std::string Value::str() const {
  switch (_kind) {
    case Kind::Undef: return "undef";
    case Kind::Bool: return _b ? "true" : "false";
    case Kind::Int: return std::to_string(_i);
    case Kind::Sym: return _s;
  }
  return "undef";
}

std::string Location::str() const {
  if (args.empty()) return fn;
  std::string out = fn + "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].str();
  }
  out += ")";
  return out;
}

} // namespace asmf
