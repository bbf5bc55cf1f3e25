#include "asmf/ast.hpp"

#include <cassert>

namespace asmf {

const char* builtin_name(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::And: return "and";
    case BuiltinOp::Or: return "or";
    case BuiltinOp::Not: return "not";
    case BuiltinOp::Implies: return "implies";
    case BuiltinOp::Eq: return "=";
    case BuiltinOp::Ne: return "!=";
    case BuiltinOp::Lt: return "<";
    case BuiltinOp::Le: return "<=";
    case BuiltinOp::Gt: return ">";
    case BuiltinOp::Ge: return ">=";
    case BuiltinOp::Add: return "+";
    case BuiltinOp::Sub: return "-";
    case BuiltinOp::Mul: return "*";
  }
  return "?";
}

int builtin_arity(BuiltinOp op) { return op == BuiltinOp::Not ? 1 : 2; }

RuleKind rule_kind(const Rule& r) {
  struct V {
    RuleKind operator()(const Update&) { return RuleKind::Update; }
    RuleKind operator()(const Par&) { return RuleKind::Par; }
    RuleKind operator()(const Cond&) { return RuleKind::Cond; }
    RuleKind operator()(const MacroCall&) { return RuleKind::MacroCall; }
    RuleKind operator()(const ProgramCall&) { return RuleKind::ProgramCall; }
    RuleKind operator()(const Forall&) { return RuleKind::Forall; }
    RuleKind operator()(const Choose&) { return RuleKind::Choose; }
    RuleKind operator()(const Let&) { return RuleKind::Let; }
    RuleKind operator()(const Case&) { return RuleKind::Case; }
    RuleKind operator()(const Skip&) { return RuleKind::Skip; }
  };
  return std::visit(V{}, r.node);
}

const char* function_kind_name(FunctionKind k) {
  switch (k) {
    case FunctionKind::Static: return "static";
    case FunctionKind::Monitored: return "monitored";
    case FunctionKind::Controlled: return "controlled";
    case FunctionKind::Derived: return "derived";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Equality (ignores spans)

static bool terms_equal(const std::vector<TermPtr>& a, const std::vector<TermPtr>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!term_equal(a[i], b[i])) return false;
  return true;
}

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  struct V {
    const Term& other;
    bool operator()(const BoolLit& x) { return std::get<BoolLit>(other.node).value == x.value; }
    bool operator()(const IntLit& x) { return std::get<IntLit>(other.node).value == x.value; }
    bool operator()(const SymLit& x) { return std::get<SymLit>(other.node).value == x.value; }
    bool operator()(const UndefLit&) { return true; }
    bool operator()(const Var& x) { return std::get<Var>(other.node).name == x.name; }
    bool operator()(const Apply& x) {
      const auto& o = std::get<Apply>(other.node);
      return o.fn == x.fn && terms_equal(o.args, x.args);
    }
    bool operator()(const Builtin& x) {
      const auto& o = std::get<Builtin>(other.node);
      return o.op == x.op && terms_equal(o.args, x.args);
    }
    bool operator()(const IsDef& x) { return term_equal(std::get<IsDef>(other.node).arg, x.arg); }
    bool operator()(const ChooseOne& x) {
      const auto& o = std::get<ChooseOne>(other.node);
      return o.var == x.var && o.domain == x.domain && term_equal(o.guard, x.guard) &&
             term_equal(o.result, x.result);
    }
  };
  return std::visit(V{*b}, a->node);
}

static bool binders_equal(const std::vector<Binder>& a, const std::vector<Binder>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].var != b[i].var || !(a[i].domain == b[i].domain)) return false;
  return true;
}

bool rule_equal(const RulePtr& a, const RulePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  struct V {
    const Rule& other;
    bool operator()(const Update& x) {
      const auto& o = std::get<Update>(other.node);
      return term_equal(o.target, x.target) && term_equal(o.value, x.value);
    }
    bool operator()(const Par& x) {
      const auto& o = std::get<Par>(other.node);
      if (o.children.size() != x.children.size()) return false;
      for (size_t i = 0; i < x.children.size(); ++i)
        if (!rule_equal(o.children[i], x.children[i])) return false;
      return true;
    }
    bool operator()(const Cond& x) {
      const auto& o = std::get<Cond>(other.node);
      return term_equal(o.guard, x.guard) && rule_equal(o.then_rule, x.then_rule) &&
             rule_equal(o.else_rule, x.else_rule);
    }
    bool operator()(const MacroCall& x) {
      const auto& o = std::get<MacroCall>(other.node);
      return o.name == x.name && terms_equal(o.args, x.args);
    }
    bool operator()(const ProgramCall& x) {
      return term_equal(std::get<ProgramCall>(other.node).agent, x.agent);
    }
    bool operator()(const Forall& x) {
      const auto& o = std::get<Forall>(other.node);
      return binders_equal(o.binders, x.binders) && term_equal(o.guard, x.guard) &&
             rule_equal(o.body, x.body);
    }
    bool operator()(const Choose& x) {
      const auto& o = std::get<Choose>(other.node);
      return o.binder.var == x.binder.var && o.binder.domain == x.binder.domain &&
             term_equal(o.guard, x.guard) && rule_equal(o.body, x.body) &&
             rule_equal(o.ifnone, x.ifnone);
    }
    bool operator()(const Let& x) {
      const auto& o = std::get<Let>(other.node);
      if (o.bindings.size() != x.bindings.size()) return false;
      for (size_t i = 0; i < x.bindings.size(); ++i)
        if (o.bindings[i].var != x.bindings[i].var ||
            !term_equal(o.bindings[i].value, x.bindings[i].value))
          return false;
      return rule_equal(o.body, x.body);
    }
    bool operator()(const Case& x) {
      const auto& o = std::get<Case>(other.node);
      if (!term_equal(o.scrutinee, x.scrutinee)) return false;
      if (o.arms.size() != x.arms.size()) return false;
      for (size_t i = 0; i < x.arms.size(); ++i)
        if (!term_equal(o.arms[i].label, x.arms[i].label) ||
            !rule_equal(o.arms[i].rule, x.arms[i].rule))
          return false;
      return rule_equal(o.otherwise, x.otherwise);
    }
    bool operator()(const Skip&) { return true; }
  };
  return std::visit(V{*b}, a->node);
}

bool model_equal(const Model& a, const Model& b) {
  if (a.name != b.name || a.main_name != b.main_name) return false;
  if (a.domains.size() != b.domains.size()) return false;
  for (size_t i = 0; i < a.domains.size(); ++i) {
    const Domain &x = a.domains[i], &y = b.domains[i];
    if (x.kind != y.kind || x.name != y.name || x.elements != y.elements || x.lo != y.lo ||
        x.hi != y.hi)
      return false;
  }
  if (a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const FunctionDecl &x = a.functions[i], &y = b.functions[i];
    if (x.name != y.name || x.kind != y.kind || !(x.result == y.result)) return false;
    if (x.params.size() != y.params.size()) return false;
    for (size_t j = 0; j < x.params.size(); ++j)
      if (!(x.params[j] == y.params[j])) return false;
  }
  if (a.definitions.size() != b.definitions.size()) return false;
  for (size_t i = 0; i < a.definitions.size(); ++i) {
    const FunctionDef &x = a.definitions[i], &y = b.definitions[i];
    if (x.name != y.name || x.is_table != y.is_table) return false;
    if (x.formals.size() != y.formals.size()) return false;
    for (size_t j = 0; j < x.formals.size(); ++j)
      if (x.formals[j].var != y.formals[j].var || !(x.formals[j].domain == y.formals[j].domain))
        return false;
    if (!term_equal(x.body, y.body)) return false;
    if (x.entries.size() != y.entries.size()) return false;
    for (size_t j = 0; j < x.entries.size(); ++j)
      if (!(x.entries[j].args == y.entries[j].args) || !(x.entries[j].value == y.entries[j].value))
        return false;
  }
  if (a.macros.size() != b.macros.size()) return false;
  for (size_t i = 0; i < a.macros.size(); ++i) {
    const MacroDecl &x = a.macros[i], &y = b.macros[i];
    if (x.name != y.name || !binders_equal(x.formals, y.formals) || !rule_equal(x.body, y.body))
      return false;
  }
  if (a.programs.size() != b.programs.size()) return false;
  for (size_t i = 0; i < a.programs.size(); ++i)
    if (a.programs[i].agent_set != b.programs[i].agent_set ||
        a.programs[i].macro != b.programs[i].macro)
      return false;
  if (a.invariants.size() != b.invariants.size()) return false;
  for (size_t i = 0; i < a.invariants.size(); ++i)
    if (a.invariants[i].name != b.invariants[i].name ||
        !term_equal(a.invariants[i].condition, b.invariants[i].condition))
      return false;
  if (!rule_equal(a.main_rule, b.main_rule)) return false;
  if (a.init.size() != b.init.size()) return false;
  for (size_t i = 0; i < a.init.size(); ++i)
    if (a.init[i].fn != b.init[i].fn || !(a.init[i].args == b.init[i].args) ||
        !(a.init[i].value == b.init[i].value))
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Builders

static TermPtr mk_term(Term t) { return std::make_shared<Term>(std::move(t)); }
static RulePtr mk_rule(Rule r) { return std::make_shared<Rule>(std::move(r)); }

TermPtr t_bool(bool v) { return mk_term({BoolLit{v}, {}}); }
TermPtr t_int(int64_t v) { return mk_term({IntLit{v}, {}}); }
TermPtr t_sym(std::string s) { return mk_term({SymLit{std::move(s)}, {}}); }
TermPtr t_undef() { return mk_term({UndefLit{}, {}}); }
TermPtr t_var(std::string name) { return mk_term({Var{std::move(name)}, {}}); }
TermPtr t_apply(std::string fn, std::vector<TermPtr> args) {
  return mk_term({Apply{std::move(fn), std::move(args)}, {}});
}
TermPtr t_op(BuiltinOp op, TermPtr a, TermPtr b) {
  assert(builtin_arity(op) == 2);
  return mk_term({Builtin{op, {std::move(a), std::move(b)}}, {}});
}
TermPtr t_not(TermPtr a) { return mk_term({Builtin{BuiltinOp::Not, {std::move(a)}}, {}}); }
TermPtr t_isdef(TermPtr a) { return mk_term({IsDef{std::move(a)}, {}}); }
TermPtr t_chooseone(std::string var, DomainRef dom, TermPtr guard, TermPtr result) {
  return mk_term({ChooseOne{std::move(var), std::move(dom), std::move(guard), std::move(result)}, {}});
}

TermPtr t_value(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Undef: return t_undef();
    case Value::Kind::Bool: return t_bool(v.as_bool());
    case Value::Kind::Int: return t_int(v.as_int());
    case Value::Kind::Sym: return t_sym(v.as_sym());
  }
  return t_undef();
}

RulePtr r_update(TermPtr target, TermPtr value) {
  return mk_rule({Update{std::move(target), std::move(value)}, {}});
}
RulePtr r_par(std::vector<RulePtr> children) { return mk_rule({Par{std::move(children)}, {}}); }
RulePtr r_cond(TermPtr guard, RulePtr then_rule, RulePtr else_rule) {
  return mk_rule({Cond{std::move(guard), std::move(then_rule), std::move(else_rule)}, {}});
}
RulePtr r_call(std::string name, std::vector<TermPtr> args) {
  return mk_rule({MacroCall{std::move(name), std::move(args)}, {}});
}
RulePtr r_program(TermPtr agent) { return mk_rule({ProgramCall{std::move(agent)}, {}}); }
RulePtr r_forall(std::vector<Binder> binders, TermPtr guard, RulePtr body) {
  return mk_rule({Forall{std::move(binders), std::move(guard), std::move(body)}, {}});
}
RulePtr r_choose(Binder binder, TermPtr guard, RulePtr body, RulePtr ifnone) {
  return mk_rule({Choose{std::move(binder), std::move(guard), std::move(body), std::move(ifnone)}, {}});
}
RulePtr r_let(std::vector<LetBinding> bindings, RulePtr body) {
  return mk_rule({Let{std::move(bindings), std::move(body)}, {}});
}
RulePtr r_case(TermPtr scrutinee, std::vector<CaseArm> arms, RulePtr otherwise) {
  return mk_rule({Case{std::move(scrutinee), std::move(arms), std::move(otherwise)}, {}});
}
RulePtr r_skip() { return mk_rule({Skip{}, {}}); }

TermPtr conj(const std::vector<TermPtr>& parts) {
  if (parts.empty()) return t_bool(true);
  TermPtr acc = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) acc = t_op(BuiltinOp::And, acc, parts[i]);
  return acc;
}

} // namespace asmf
