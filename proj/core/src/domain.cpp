#include "asmf/domain.hpp"

#include <cassert>
#include <limits>

namespace asmf {

Domain Domain::int_range(int64_t lo, int64_t hi, std::string name) {
  assert(lo <= hi);
  Domain d;
  d.kind = Kind::IntRange;
  d.name = std::move(name);
  d.lo = lo;
  d.hi = hi;
  return d;
}

Domain Domain::enumeration(std::string name, std::vector<std::string> elements) {
  Domain d;
  d.kind = Kind::Enum;
  d.name = std::move(name);
  d.elements = std::move(elements);
  return d;
}

Domain Domain::agent_set(std::string name, std::vector<std::string> agents) {
  Domain d;
  d.kind = Kind::AgentSet;
  d.name = std::move(name);
  d.elements = std::move(agents);
  return d;
}

int64_t Domain::cardinality() const {
  switch (kind) {
    case Kind::Boolean: return 2;
    case Kind::IntRange: {
      // saturate: inferred intervals can span nearly the whole carrier
      __int128 n = static_cast<__int128>(hi) - lo + 1;
      constexpr int64_t kMax = std::numeric_limits<int64_t>::max();
      return n > kMax ? kMax : static_cast<int64_t>(n);
    }
    case Kind::Enum:
    case Kind::AgentSet: return static_cast<int64_t>(elements.size());
  }
  return 0;
}

bool Domain::contains(const Value& v) const {
  switch (kind) {
    case Kind::Boolean:
      return v.kind() == Value::Kind::Bool;
    case Kind::IntRange:
      return v.kind() == Value::Kind::Int && v.as_int() >= lo && v.as_int() <= hi;
    case Kind::Enum:
    case Kind::AgentSet:
      if (v.kind() != Value::Kind::Sym) return false;
      for (const auto& e : elements)
        if (e == v.as_sym()) return true;
      return false;
  }
  return false;
}

bool Domain::same_carrier(const Domain& o) const {
  if (kind == Kind::IntRange && o.kind == Kind::IntRange) return true;
  if (kind != o.kind) return false;
  if (kind == Kind::Boolean) return true;
  return name == o.name;
}

std::string Domain::str() const {
  switch (kind) {
    case Kind::Boolean: return "Boolean";
    case Kind::IntRange:
      if (!name.empty()) return name;
      return "[" + std::to_string(lo) + ".." + std::to_string(hi) + "]";
    case Kind::Enum:
    case Kind::AgentSet: return name;
  }
  return "";
}

std::vector<Value> enumerate_domain(const Domain& d) {
  std::vector<Value> out;
  switch (d.kind) {
    case Domain::Kind::Boolean:
      out.push_back(Value::boolean(false));
      out.push_back(Value::boolean(true));
      break;
    case Domain::Kind::IntRange:
      out.reserve(static_cast<size_t>(d.hi - d.lo + 1));
      for (int64_t v = d.lo; v <= d.hi; ++v) out.push_back(Value::integer(v));
      break;
    case Domain::Kind::Enum:
    case Domain::Kind::AgentSet:
      out.reserve(d.elements.size());
      for (const auto& e : d.elements) out.push_back(Value::symbol(e));
      break;
  }
  return out;
}

std::vector<std::vector<Value>> domain_product(const std::vector<Domain>& ds) {
  std::vector<std::vector<Value>> out{{}};
  for (const auto& d : ds) {
    std::vector<Value> values = enumerate_domain(d);
    std::vector<std::vector<Value>> next;
    next.reserve(out.size() * values.size());
    for (const auto& prefix : out) {
      for (const auto& v : values) {
        std::vector<Value> tuple = prefix;
        tuple.push_back(v);
        next.push_back(std::move(tuple));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::string DomainRef::str() const {
  switch (kind) {
    case Kind::Named: return name;
    case Kind::Boolean: return "Boolean";
    case Kind::Range: return "[" + std::to_string(lo) + ".." + std::to_string(hi) + "]";
  }
  return "";
}

} // namespace asmf
