#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "asmf/ast.hpp"

namespace asmf {

// Bounds and weights for random model generation. All maxima are clamped to
// at least 1. Weights are keyed by rule constructor name; a zero weight
// disables that constructor (update and skip stay available as leaves).
struct GenConfig {
  uint64_t seed = 0;
  int max_depth = 4;            // rule nesting depth
  int max_domains = 3;          // named domains besides Boolean
  int max_functions = 6;
  int max_macros = 3;
  int64_t max_domain_card = 4;  // elements per enum / width of ranges
  int64_t max_int = 8;          // magnitude bound for range endpoints

  std::map<std::string, int> weights = default_weights();
  // update, par, cond, forall, choose, let, case, macro_call, skip — all
  // present with nonzero weight.
  static std::map<std::string, int> default_weights();
};

// Deterministic in the seed. Generation is type-directed, so the output
// always passes `check` with zero errors; runtime faults (out-of-domain
// arguments, undefined guards) remain possible and are part of the behavior
// under differential test.
Model gen_model(const GenConfig& config);

} // namespace asmf
