#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asmf/ast.hpp"
#include "asmf/diag.hpp"

namespace asmf {

// Carrier-level type of a term: boolean, an integer interval, or an element
// of a named symbolic domain (enum or agent set). Integer intervals are the
// inferred value range, used both for containment checks on definitions and
// to bound introduced variables when expanding.
struct TType {
  enum class Tag { Bool, Int, Sym };
  Tag tag = Tag::Bool;
  int64_t lo = 0, hi = 0;   // Tag::Int
  std::string domain_name;  // Tag::Sym

  static TType boolean() { return {Tag::Bool, 0, 0, ""}; }
  static TType integer(int64_t lo, int64_t hi) { return {Tag::Int, lo, hi, ""}; }
  static TType sym(std::string domain) { return {Tag::Sym, 0, 0, std::move(domain)}; }

  bool same_carrier(const TType& o) const {
    if (tag != o.tag) return false;
    if (tag == Tag::Sym) return domain_name == o.domain_name;
    return true;
  }
};

// A checked model plus its resolved lookup tables.
struct TypedModel {
  Model model;

  std::map<std::string, Domain> domains;        // named domains, incl. agent sets
  std::map<std::string, FunctionDecl> decls;    // all declared functions
  std::map<std::string, FunctionDef> defs;      // static / derived definitions
  std::map<std::string, MacroDecl> macro_table;
  std::map<std::string, std::string> constant_owner; // symbol -> domain name
  std::optional<Domain> agent_domain;           // the model's agent set, if any
  std::map<std::string, std::string> agent_program; // agent set -> 0-ary macro

  const FunctionDecl* decl(const std::string& name) const {
    auto it = decls.find(name);
    return it == decls.end() ? nullptr : &it->second;
  }
  const FunctionDef* def(const std::string& name) const {
    auto it = defs.find(name);
    return it == defs.end() ? nullptr : &it->second;
  }
  const MacroDecl* macro(const std::string& name) const {
    auto it = macro_table.find(name);
    return it == macro_table.end() ? nullptr : &it->second;
  }
  // Resolves a reference; named refs must exist (checked), ranges synthesize
  // an anonymous domain.
  Domain resolve(const DomainRef& ref) const;
  // Declared param domains / result domain of a function.
  std::vector<Domain> param_domains(const FunctionDecl& d) const;
  Domain result_domain(const FunctionDecl& d) const;

  // Every location of the given kind, in (name, args) order.
  std::vector<Location> locations_of_kind(FunctionKind kind) const;
};

struct CheckResult {
  std::optional<TypedModel> typed;
  std::vector<Diagnostic> errors;
  bool ok() const { return typed.has_value(); }
};

// Full static check: name resolution, arities, carrier types, update targets,
// init totality, definition wellformedness (kind, coverage, acyclicity,
// result containment), agent wiring, `self` placement, undef placement,
// selection terms confined to derived definitions.
// Diagnostics carry stable codes:
//   E_UNRESOLVED E_ARITY E_TYPE E_DOMAIN E_DUPLICATE E_DEF E_CYCLE
//   E_UPDATE_TARGET E_PARTIAL_INIT E_SELF E_NO_MAIN
CheckResult check(const Model& m);

// Infers the carrier type of a term under variable typings; nullopt when the
// term is ill-typed. Interval bounds for integers use saturating arithmetic.
using VarTypes = std::map<std::string, TType>;
std::optional<TType> infer_type(const TypedModel& tm, const TermPtr& t, const VarTypes& vars);

// The finite domain carrying a type: Boolean, the named domain, or an
// anonymous range for Tag::Int. Used to enumerate candidates for a variable
// of that type.
Domain ttype_domain(const TypedModel& tm, const TType& t);

// TType of the values in a domain (interval = full range).
TType domain_ttype(const Domain& d);

} // namespace asmf
