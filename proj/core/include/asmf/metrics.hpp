#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "asmf/ast.hpp"

namespace asmf {

// Per-constructor rule counts over the main rule plus ALL declared macro
// bodies (used or not). MacroCall and ProgramCall share one bucket.
struct RuleHistogram {
  int64_t update = 0;
  int64_t parallel = 0;
  int64_t conditional = 0;
  int64_t forall = 0;
  int64_t choose = 0;
  int64_t case_rule = 0;
  int64_t let_rule = 0;
  int64_t macro_call = 0;
  int64_t skip = 0;

  int64_t total() const {
    return update + parallel + conditional + forall + choose + case_rule +
           let_rule + macro_call + skip;
  }
  bool operator==(const RuleHistogram&) const = default;
  std::string table() const;
  std::string csv() const;
};

RuleHistogram count_rules(const RulePtr& r);
RuleHistogram count_rules(const Model& m);

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Signed growth percentage (after vs before), rounded half away from zero.
// before must be positive.
int64_t delta_percent(int64_t after, int64_t before);

// Depth of the rule tree: a leaf rule is 1 level, every constructor adds one.
int max_nesting(const RulePtr& r);
// Max over the main rule and all macro bodies.
int max_nesting(const Model& m);

} // namespace asmf
