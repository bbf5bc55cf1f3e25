#pragma once

#include <string>
#include <vector>

#include "asmf/ast.hpp"
#include "asmf/diag.hpp"

namespace asmf {

struct ParseOptions {
  // Variable names beginning with "$flat_" are reserved for generated code
  // and rejected unless this is set (used when re-reading generated output).
  bool allow_reserved_names = false;
};

struct ParseResult {
  Model model;
  std::vector<Diagnostic> errors;
  bool ok() const { return errors.empty(); }
};

ParseResult parse_model(const std::string& source, const ParseOptions& opts = {});

// Parse a single term / rule from an isolated snippet (test helper). Throws
// std::runtime_error on any diagnostic.
TermPtr parse_term(const std::string& source, const ParseOptions& opts = {});
RulePtr parse_rule(const std::string& source, const ParseOptions& opts = {});

} // namespace asmf
