#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "asmf/ast.hpp"

namespace asmf {

// Variable name (with sigil) -> replacement term.
using Binding = std::map<std::string, TermPtr>;

// Source of fresh "$flat_<n>" variable names. Fresh names never collide with
// user identifiers because the parser rejects the $flat_ prefix by default,
// and generators seed the counter past any index already present.
class FreshNames {
 public:
  explicit FreshNames(uint64_t next = 1) : _next(next) {}
  std::string fresh() { return "$flat_" + std::to_string(_next++); }
  uint64_t next_index() const { return _next; }
  void bump_past(uint64_t index) {
    if (index >= _next) _next = index + 1;
  }

  static FreshNames seeded_from(const Model& m);

 private:
  uint64_t _next;
};

// Capture-avoiding substitution. Binders shadowing a substituted variable cut
// the substitution; binders whose variable occurs free in a replacement term
// are renamed to a fresh name first.
TermPtr substitute(const TermPtr& t, const Binding& binding, FreshNames& fresh);
RulePtr substitute(const RulePtr& r, const Binding& binding, FreshNames& fresh);
// Convenience: seeds the fresh counter by scanning the rule and the binding.
RulePtr substitute(const RulePtr& r, const Binding& binding);
TermPtr substitute(const TermPtr& t, const Binding& binding);

std::set<std::string> free_variables(const TermPtr& t);
std::set<std::string> free_variables(const RulePtr& r);

// Largest n such that "$flat_<n>" occurs (bound or free) in the tree; 0 if none.
uint64_t max_flat_index(const RulePtr& r);
uint64_t max_flat_index(const TermPtr& t);

// Replaces every occurrence of `from` (structural match) by `to` inside a
// rule or term, skipping subtrees where a binder captures a variable free in
// `from`.
RulePtr replace_term(const RulePtr& r, const TermPtr& from, const TermPtr& to);
TermPtr replace_term(const TermPtr& t, const TermPtr& from, const TermPtr& to);

} // namespace asmf
