#pragma once

#include <string>
#include <vector>

#include "asmf/ast.hpp"

namespace asmf {

// Normal form: the main rule is a Par whose children are Updates or else-free
// Conds; each Cond body is an Update or a Par of Updates; no macros, no
// program bindings, no Skips anywhere. A single Update or else-free Cond as
// the whole main body counts as a degenerate one-child Par.
struct NormalFormReport {
  bool normal = false;
  // Paths into the AST of the offending nodes, e.g. "main.par[3].cond.then".
  std::vector<std::string> violations;
};

NormalFormReport is_normal_form(const Model& m);

} // namespace asmf
