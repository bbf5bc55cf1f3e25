#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "asmf/domain.hpp"
#include "asmf/span.hpp"
#include "asmf/value.hpp"

namespace asmf {

struct Term;
struct Rule;
using TermPtr = std::shared_ptr<const Term>;
using RulePtr = std::shared_ptr<const Rule>;

// ---------------------------------------------------------------------------
// Terms

enum class BuiltinOp {
  And, Or, Not, Implies,
  Eq, Ne, Lt, Le, Gt, Ge,
  Add, Sub, Mul,
};

const char* builtin_name(BuiltinOp op);
int builtin_arity(BuiltinOp op); // 1 for Not, 2 otherwise

struct BoolLit { bool value = false; };
struct IntLit { int64_t value = 0; };
// Enum element or agent constant; constants are globally unique so the bare
// symbol identifies its domain.
struct SymLit { std::string value; };
struct UndefLit {};
// Variable names keep their sigil ("$x"); the special name "self" has none.
struct Var { std::string name; };
struct Apply {
  std::string fn;
  std::vector<TermPtr> args;
};
struct Builtin {
  BuiltinOp op = BuiltinOp::And;
  std::vector<TermPtr> args;
};
struct IsDef { TermPtr arg; };
// chooseone({$v in D | guard : result}) — selects one element of
// {result[v] | v in D, guard[v]} under the active choice policy; undef when
// the satisfying set is empty.
struct ChooseOne {
  std::string var;
  DomainRef domain;
  TermPtr guard;
  TermPtr result;
};

struct Term {
  std::variant<BoolLit, IntLit, SymLit, UndefLit, Var, Apply, Builtin, IsDef, ChooseOne> node;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Rules

struct Binder {
  std::string var;
  DomainRef domain;
};
struct LetBinding {
  std::string var;
  TermPtr value;
};

struct Update {
  TermPtr target; // always an Apply of a controlled function
  TermPtr value;
};
struct Par { std::vector<RulePtr> children; };
struct Cond {
  TermPtr guard;
  RulePtr then_rule;
  RulePtr else_rule; // may be null
};
struct MacroCall {
  std::string name;
  std::vector<TermPtr> args;
};
struct ProgramCall { TermPtr agent; };
struct Forall {
  std::vector<Binder> binders;
  TermPtr guard;
  RulePtr body;
};
struct Choose {
  Binder binder;
  TermPtr guard;
  RulePtr body;
  RulePtr ifnone; // may be null
};
struct Let {
  std::vector<LetBinding> bindings;
  RulePtr body;
};
struct CaseArm {
  TermPtr label;
  RulePtr rule;
};
struct Case {
  TermPtr scrutinee;
  std::vector<CaseArm> arms;
  RulePtr otherwise; // may be null
};
struct Skip {};

struct Rule {
  std::variant<Update, Par, Cond, MacroCall, ProgramCall, Forall, Choose, Let, Case, Skip> node;
  SourceSpan span;
};

enum class RuleKind { Update, Par, Cond, MacroCall, ProgramCall, Forall, Choose, Let, Case, Skip };
RuleKind rule_kind(const Rule& r);
inline RuleKind rule_kind(const RulePtr& r) { return rule_kind(*r); }

// ---------------------------------------------------------------------------
// Model

enum class FunctionKind { Static, Monitored, Controlled, Derived };
const char* function_kind_name(FunctionKind k);

struct FunctionDecl {
  std::string name;
  FunctionKind kind = FunctionKind::Controlled;
  std::vector<DomainRef> params;
  DomainRef result;
  SourceSpan span;
};

// Definition for a static or derived function: either a defining term over
// $-formals, or (static only) an explicit value table.
struct FunctionDef {
  std::string name;
  bool is_table = false;
  std::vector<Binder> formals; // term form
  TermPtr body;                // term form
  struct TableEntry {
    std::vector<Value> args;
    Value value;
  };
  std::vector<TableEntry> entries; // table form
  SourceSpan span;
};

struct MacroDecl {
  std::string name;
  std::vector<Binder> formals;
  RulePtr body;
  SourceSpan span;
};

// agent <Set> : <macro>[] — agents of the set run the named 0-ary macro, in
// whose body `self` denotes the executing agent.
struct AgentBinding {
  std::string agent_set;
  std::string macro;
  SourceSpan span;
};

struct Invariant {
  std::string name;
  TermPtr condition;
  SourceSpan span;
};

struct InitEntry {
  std::string fn;
  std::vector<Value> args;
  Value value;
  SourceSpan span;
};

struct Model {
  std::string name;
  std::vector<Domain> domains;
  std::vector<FunctionDecl> functions;
  std::vector<FunctionDef> definitions;
  std::vector<MacroDecl> macros;
  std::vector<AgentBinding> programs;
  std::vector<Invariant> invariants;
  std::string main_name;
  RulePtr main_rule;
  std::vector<InitEntry> init;
};

// ---------------------------------------------------------------------------
// Structural equality, span-insensitive.

bool term_equal(const TermPtr& a, const TermPtr& b);
bool rule_equal(const RulePtr& a, const RulePtr& b);
bool model_equal(const Model& a, const Model& b);

// ---------------------------------------------------------------------------
// Node builders. Spans default to zero (synthesized).

TermPtr t_bool(bool v);
TermPtr t_int(int64_t v);
TermPtr t_sym(std::string s);
TermPtr t_undef();
TermPtr t_var(std::string name);
TermPtr t_apply(std::string fn, std::vector<TermPtr> args = {});
TermPtr t_op(BuiltinOp op, TermPtr a, TermPtr b);
TermPtr t_not(TermPtr a);
TermPtr t_isdef(TermPtr a);
TermPtr t_chooseone(std::string var, DomainRef dom, TermPtr guard, TermPtr result);
TermPtr t_value(const Value& v); // literal term for a runtime value

RulePtr r_update(TermPtr target, TermPtr value);
RulePtr r_par(std::vector<RulePtr> children);
RulePtr r_cond(TermPtr guard, RulePtr then_rule, RulePtr else_rule = nullptr);
RulePtr r_call(std::string name, std::vector<TermPtr> args = {});
RulePtr r_program(TermPtr agent);
RulePtr r_forall(std::vector<Binder> binders, TermPtr guard, RulePtr body);
RulePtr r_choose(Binder binder, TermPtr guard, RulePtr body, RulePtr ifnone = nullptr);
RulePtr r_let(std::vector<LetBinding> bindings, RulePtr body);
RulePtr r_case(TermPtr scrutinee, std::vector<CaseArm> arms, RulePtr otherwise = nullptr);
RulePtr r_skip();

// Conjunction of parts, left-associated; true when empty.
TermPtr conj(const std::vector<TermPtr>& parts);

} // namespace asmf
