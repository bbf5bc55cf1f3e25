#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asmf/value.hpp"

namespace asmf {

// A finite value domain. Every domain in a model is finite and enumerable:
// Boolean, a named enumeration, a bounded integer range, or a set of agent
// constants. Anonymous ranges (written inline as [lo..hi]) have an empty name.
struct Domain {
  enum class Kind { Boolean, Enum, IntRange, AgentSet };

  Kind kind = Kind::Boolean;
  std::string name;
  std::vector<std::string> elements; // Enum / AgentSet, declaration order
  int64_t lo = 0, hi = 0;            // IntRange, lo <= hi

  static Domain boolean() { return Domain{}; }
  static Domain int_range(int64_t lo, int64_t hi, std::string name = "");
  static Domain enumeration(std::string name, std::vector<std::string> elements);
  static Domain agent_set(std::string name, std::vector<std::string> agents);

  int64_t cardinality() const;
  bool contains(const Value& v) const;
  // Same carrier, for compatibility checks: Boolean==Boolean, ranges are all
  // compatible with each other, named domains by name.
  bool same_carrier(const Domain& o) const;
  std::string str() const;
};

// Ascending / declaration-order enumeration: Boolean yields [false, true],
// ranges ascend, enums and agent sets follow declaration order.
std::vector<Value> enumerate_domain(const Domain& d);

// All argument tuples over the given domains, in lexicographic order with the
// leftmost domain most significant (rightmost varies fastest). A single empty
// tuple when ds is empty.
std::vector<std::vector<Value>> domain_product(const std::vector<Domain>& ds);

// How a declaration refers to a domain: by name, the builtin Boolean, or an
// inline integer range.
struct DomainRef {
  enum class Kind { Named, Boolean, Range };
  Kind kind = Kind::Boolean;
  std::string name;
  int64_t lo = 0, hi = 0;

  static DomainRef named(std::string n) { return {Kind::Named, std::move(n), 0, 0}; }
  static DomainRef boolean() { return {Kind::Boolean, "", 0, 0}; }
  static DomainRef range(int64_t lo, int64_t hi) { return {Kind::Range, "", lo, hi}; }

  bool operator==(const DomainRef& o) const {
    return kind == o.kind && name == o.name && lo == o.lo && hi == o.hi;
  }
  std::string str() const;
};

} // namespace asmf
