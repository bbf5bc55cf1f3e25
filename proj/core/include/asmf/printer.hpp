#pragma once

#include <string>

#include "asmf/ast.hpp"

namespace asmf {

// Canonical source form. Guaranteed to re-parse to a structurally equal
// model/term/rule (spans aside).
std::string print_model(const Model& m);
std::string print_term(const TermPtr& t);
std::string print_rule(const RulePtr& r, int indent = 0);

} // namespace asmf
