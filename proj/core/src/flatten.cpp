#include "asmf/flatten.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>

#include "asmf/interp.hpp"
#include "asmf/metrics.hpp"

namespace asmf {

namespace {

// --------------------------------------------------------------------------
// Shared helpers

// Hard ceiling on rules materialized by one expansion pass and on the model
// between passes: a deterministic error beats exhausting memory.
constexpr int64_t kMaxExpansion = int64_t{1} << 20;

const char* rule_kind_label(const RulePtr& r) {
  switch (rule_kind(r)) {
    case RuleKind::Update: return "update";
    case RuleKind::Par: return "parallel block";
    case RuleKind::Cond: return "conditional";
    case RuleKind::MacroCall: return "rule call";
    case RuleKind::ProgramCall: return "program dispatch";
    case RuleKind::Forall: return "forall";
    case RuleKind::Choose: return "choose";
    case RuleKind::Let: return "let";
    case RuleKind::Case: return "switch";
    case RuleKind::Skip: return "skip";
  }
  return "rule";
}

bool is_literal(const TermPtr& t) {
  return t && (std::holds_alternative<BoolLit>(t->node) || std::holds_alternative<IntLit>(t->node) ||
               std::holds_alternative<SymLit>(t->node) || std::holds_alternative<UndefLit>(t->node));
}

bool is_var(const TermPtr& t) { return t && std::holds_alternative<Var>(t->node); }

std::optional<Value> literal_value(const TermPtr& t) {
  if (!t) return std::nullopt;
  if (const auto* b = std::get_if<BoolLit>(&t->node)) return Value::boolean(b->value);
  if (const auto* i = std::get_if<IntLit>(&t->node)) return Value::integer(i->value);
  if (const auto* s = std::get_if<SymLit>(&t->node)) return Value::symbol(s->value);
  if (std::get_if<UndefLit>(&t->node)) return Value::undef();
  return std::nullopt;
}

std::optional<bool> bool_literal(const TermPtr& t) {
  if (!t) return std::nullopt;
  if (const auto* b = std::get_if<BoolLit>(&t->node)) return b->value;
  return std::nullopt;
}

DomainRef domain_to_ref(const Domain& d) {
  switch (d.kind) {
    case Domain::Kind::Boolean: return DomainRef::boolean();
    case Domain::Kind::IntRange:
      return d.name.empty() ? DomainRef::range(d.lo, d.hi) : DomainRef::named(d.name);
    case Domain::Kind::Enum:
    case Domain::Kind::AgentSet: return DomainRef::named(d.name);
  }
  return DomainRef::boolean();
}

// Rebuilds a rule with every direct subrule mapped through f; terms are left
// alone. Returns the original pointer when nothing changed.
RulePtr map_children(const RulePtr& r, const std::function<RulePtr(const RulePtr&)>& f) {
  if (!r) return r;
  if (const auto* p = std::get_if<Par>(&r->node)) {
    bool changed = false;
    std::vector<RulePtr> children;
    for (const auto& c : p->children) {
      auto nc = f(c);
      changed |= nc != c;
      children.push_back(std::move(nc));
    }
    if (!changed) return r;
    return std::make_shared<Rule>(Rule{Par{std::move(children)}, r->span});
  }
  if (const auto* c = std::get_if<Cond>(&r->node)) {
    auto nt = f(c->then_rule);
    auto ne = f(c->else_rule);
    if (nt == c->then_rule && ne == c->else_rule) return r;
    return std::make_shared<Rule>(Rule{Cond{c->guard, std::move(nt), std::move(ne)}, r->span});
  }
  if (const auto* fa = std::get_if<Forall>(&r->node)) {
    auto nb = f(fa->body);
    if (nb == fa->body) return r;
    return std::make_shared<Rule>(Rule{Forall{fa->binders, fa->guard, std::move(nb)}, r->span});
  }
  if (const auto* ch = std::get_if<Choose>(&r->node)) {
    auto nb = f(ch->body);
    auto ni = f(ch->ifnone);
    if (nb == ch->body && ni == ch->ifnone) return r;
    return std::make_shared<Rule>(
        Rule{Choose{ch->binder, ch->guard, std::move(nb), std::move(ni)}, r->span});
  }
  if (const auto* l = std::get_if<Let>(&r->node)) {
    auto nb = f(l->body);
    if (nb == l->body) return r;
    return std::make_shared<Rule>(Rule{Let{l->bindings, std::move(nb)}, r->span});
  }
  if (const auto* cs = std::get_if<Case>(&r->node)) {
    bool changed = false;
    std::vector<CaseArm> arms;
    for (const auto& arm : cs->arms) {
      auto nr = f(arm.rule);
      changed |= nr != arm.rule;
      arms.push_back({arm.label, std::move(nr)});
    }
    auto no = f(cs->otherwise);
    changed |= no != cs->otherwise;
    if (!changed) return r;
    return std::make_shared<Rule>(
        Rule{Case{cs->scrutinee, std::move(arms), std::move(no)}, r->span});
  }
  return r; // Update, MacroCall, ProgramCall, Skip have no subrules
}

// Rebuilds a rule with every immediate term position mapped through tf,
// recursing through all subrules.
RulePtr map_terms(const RulePtr& r, const std::function<TermPtr(const TermPtr&)>& tf) {
  if (!r) return r;
  auto rec = [&](const RulePtr& x) { return map_terms(x, tf); };
  if (const auto* u = std::get_if<Update>(&r->node)) {
    auto nt = tf(u->target);
    auto nv = tf(u->value);
    if (nt == u->target && nv == u->value) return r;
    return std::make_shared<Rule>(Rule{Update{std::move(nt), std::move(nv)}, r->span});
  }
  if (const auto* c = std::get_if<Cond>(&r->node)) {
    auto ng = tf(c->guard);
    auto nt = rec(c->then_rule);
    auto ne = rec(c->else_rule);
    if (ng == c->guard && nt == c->then_rule && ne == c->else_rule) return r;
    return std::make_shared<Rule>(
        Rule{Cond{std::move(ng), std::move(nt), std::move(ne)}, r->span});
  }
  if (const auto* mc = std::get_if<MacroCall>(&r->node)) {
    bool changed = false;
    std::vector<TermPtr> args;
    for (const auto& a : mc->args) {
      auto na = tf(a);
      changed |= na != a;
      args.push_back(std::move(na));
    }
    if (!changed) return r;
    return std::make_shared<Rule>(Rule{MacroCall{mc->name, std::move(args)}, r->span});
  }
  if (const auto* pc = std::get_if<ProgramCall>(&r->node)) {
    auto na = tf(pc->agent);
    if (na == pc->agent) return r;
    return std::make_shared<Rule>(Rule{ProgramCall{std::move(na)}, r->span});
  }
  if (const auto* fa = std::get_if<Forall>(&r->node)) {
    auto ng = tf(fa->guard);
    auto nb = rec(fa->body);
    if (ng == fa->guard && nb == fa->body) return r;
    return std::make_shared<Rule>(
        Rule{Forall{fa->binders, std::move(ng), std::move(nb)}, r->span});
  }
  if (const auto* ch = std::get_if<Choose>(&r->node)) {
    auto ng = tf(ch->guard);
    auto nb = rec(ch->body);
    auto ni = rec(ch->ifnone);
    if (ng == ch->guard && nb == ch->body && ni == ch->ifnone) return r;
    return std::make_shared<Rule>(
        Rule{Choose{ch->binder, std::move(ng), std::move(nb), std::move(ni)}, r->span});
  }
  if (const auto* l = std::get_if<Let>(&r->node)) {
    bool changed = false;
    std::vector<LetBinding> bindings;
    for (const auto& b : l->bindings) {
      auto nv = tf(b.value);
      changed |= nv != b.value;
      bindings.push_back({b.var, std::move(nv)});
    }
    auto nb = rec(l->body);
    changed |= nb != l->body;
    if (!changed) return r;
    return std::make_shared<Rule>(Rule{Let{std::move(bindings), std::move(nb)}, r->span});
  }
  if (const auto* cs = std::get_if<Case>(&r->node)) {
    bool changed = false;
    auto ns = tf(cs->scrutinee);
    changed |= ns != cs->scrutinee;
    std::vector<CaseArm> arms;
    for (const auto& arm : cs->arms) {
      auto nl = tf(arm.label);
      auto nr = rec(arm.rule);
      changed |= nl != arm.label || nr != arm.rule;
      arms.push_back({std::move(nl), std::move(nr)});
    }
    auto no = rec(cs->otherwise);
    changed |= no != cs->otherwise;
    if (!changed) return r;
    return std::make_shared<Rule>(
        Rule{Case{std::move(ns), std::move(arms), std::move(no)}, r->span});
  }
  return map_children(r, rec); // Par; Update handled above; leaves unchanged
}

// --------------------------------------------------------------------------
// MCR: macro call removal

void collect_calls(const TypedModel& tm, const RulePtr& r, std::vector<std::string>& out) {
  if (!r) return;
  if (const auto* mc = std::get_if<MacroCall>(&r->node)) {
    out.push_back(mc->name);
    return;
  }
  if (std::get_if<ProgramCall>(&r->node)) {
    if (tm.agent_domain) {
      auto it = tm.agent_program.find(tm.agent_domain->name);
      if (it != tm.agent_program.end()) out.push_back(it->second);
    }
    return;
  }
  map_children(r, [&](const RulePtr& c) {
    collect_calls(tm, c, out);
    return c;
  });
}

} // namespace

PassOutcome pass_mcr(const TypedModel& tm, FreshNames& fresh) {
  int64_t count = 0;
  std::map<std::string, const MacroDecl*> macros;
  for (const auto& mac : tm.model.macros) macros[mac.name] = &mac;

  std::string program_macro;
  if (tm.agent_domain) {
    auto it = tm.agent_program.find(tm.agent_domain->name);
    if (it != tm.agent_program.end()) program_macro = it->second;
  }

  std::map<std::string, RulePtr> flat; // fully inlined bodies

  // Replaces each call in a rule by the (already flattened) callee body with
  // the argument terms substituted for the formals. Each original call site
  // is visited exactly once across the whole sweep, so the pass count equals
  // the model's call count.
  std::function<RulePtr(const RulePtr&)> inl = [&](const RulePtr& r) -> RulePtr {
    if (!r) return r;
    if (const auto* mc = std::get_if<MacroCall>(&r->node)) {
      const MacroDecl* mac = macros.at(mc->name);
      Binding b;
      for (size_t i = 0; i < mac->formals.size(); ++i) b[mac->formals[i].var] = mc->args[i];
      ++count;
      return substitute(flat.at(mc->name), b, fresh);
    }
    if (const auto* pc = std::get_if<ProgramCall>(&r->node)) {
      if (program_macro.empty())
        throw FlattenError("internal error: program dispatch without an agent program");
      ++count;
      return substitute(flat.at(program_macro), Binding{{"self", pc->agent}}, fresh);
    }
    return map_children(r, inl);
  };

  // Bottom-up over the call graph: callees are flattened before their callers.
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    int& st = state[name];
    if (st == 2) return;
    if (st == 1) throw FlattenError("recursive rule '" + name + "' cannot be inlined");
    st = 1;
    std::vector<std::string> callees;
    collect_calls(tm, macros.at(name)->body, callees);
    for (const auto& c : callees) visit(c);
    flat[name] = inl(macros.at(name)->body);
    st = 2;
  };
  for (const auto& mac : tm.model.macros) visit(mac.name);

  Model out = tm.model;
  out.main_rule = inl(tm.model.main_rule);
  out.macros.clear();
  out.programs.clear();
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// FR: forall removal

PassOutcome pass_fr(const TypedModel& tm, FreshNames& fresh) {
  int64_t count = 0;
  int64_t produced = 0; // rule copies built by this pass, nested expansions included
  std::function<RulePtr(const RulePtr&)> go = [&](const RulePtr& r) -> RulePtr {
    if (!r) return r;
    if (const auto* fa = std::get_if<Forall>(&r->node)) {
      ++count;
      std::vector<Domain> domains;
      int64_t total = 1;
      for (const auto& b : fa->binders) {
        Domain d = tm.resolve(b.domain);
        int64_t card = d.cardinality();
        if (card <= 0 || total > kMaxExpansion / card)
          throw FlattenError("forall expansion exceeds " + std::to_string(kMaxExpansion) +
                             " branches");
        total *= card;
        domains.push_back(std::move(d));
      }
      produced += total * std::max<int64_t>(1, count_rules(fa->body).total());
      if (produced > kMaxExpansion)
        throw FlattenError("forall expansion exceeds " + std::to_string(kMaxExpansion) +
                           " expanded rules");
      std::vector<RulePtr> children;
      for (const auto& tuple : domain_product(domains)) {
        Binding sigma;
        for (size_t i = 0; i < fa->binders.size(); ++i)
          sigma[fa->binders[i].var] = t_value(tuple[i]);
        auto guard = substitute(fa->guard, sigma, fresh);
        auto body = go(substitute(fa->body, sigma, fresh));
        children.push_back(r_cond(std::move(guard), std::move(body)));
      }
      return r_par(std::move(children));
    }
    return map_children(r, go);
  };

  Model out = tm.model;
  out.main_rule = go(tm.model.main_rule);
  for (auto& mac : out.macros) mac.body = go(mac.body);
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// ChR: choose removal

PassOutcome pass_chr(const TypedModel& tm, FreshNames& fresh) {
  int64_t count = 0;
  Model out = tm.model;

  uint64_t next_fn = 1;
  for (const auto& f : tm.model.functions) {
    const std::string prefix = "flat_choose_";
    if (f.name.rfind(prefix, 0) == 0) {
      const std::string digits = f.name.substr(prefix.size());
      if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos)
        next_fn = std::max(next_fn, static_cast<uint64_t>(std::stoull(digits)) + 1);
    }
  }

  std::function<RulePtr(const RulePtr&, const VarTypes&)> go =
      [&](const RulePtr& r, const VarTypes& env) -> RulePtr {
    if (!r) return r;
    if (const auto* ch = std::get_if<Choose>(&r->node)) {
      ++count;

      // The selection becomes a derived function over the guard's free
      // variables; `self` becomes an explicit agent parameter.
      std::set<std::string> fv = free_variables(ch->guard);
      fv.erase(ch->binder.var);
      bool uses_self = fv.erase("self") > 0;

      std::vector<Binder> formals;
      std::vector<TermPtr> call_args;
      std::vector<DomainRef> params;
      for (const auto& name : fv) {
        auto it = env.find(name);
        if (it == env.end())
          throw FlattenError("internal error: no type for variable '" + name + "'");
        DomainRef ref = domain_to_ref(ttype_domain(tm, it->second));
        formals.push_back({name, ref});
        params.push_back(ref);
        call_args.push_back(t_var(name));
      }
      TermPtr def_guard = ch->guard;
      if (uses_self) {
        if (!tm.agent_domain)
          throw FlattenError("internal error: 'self' without an agent set");
        DomainRef ref = DomainRef::named(tm.agent_domain->name);
        formals.push_back({"$flat_self", ref});
        params.push_back(ref);
        call_args.push_back(t_var("self"));
        def_guard = substitute(def_guard, Binding{{"self", t_var("$flat_self")}}, fresh);
      }

      std::string fn = "flat_choose_" + std::to_string(next_fn++);
      FunctionDecl decl;
      decl.name = fn;
      decl.kind = FunctionKind::Derived;
      decl.params = params;
      decl.result = ch->binder.domain;
      out.functions.push_back(std::move(decl));

      FunctionDef def;
      def.name = fn;
      def.formals = formals;
      def.body = t_chooseone(ch->binder.var, ch->binder.domain, def_guard,
                             t_var(ch->binder.var));
      out.definitions.push_back(std::move(def));

      // process the body first, while the binder is still an ordinary typed
      // variable; only then replace it by the selection call
      TermPtr call = t_apply(fn, call_args);
      VarTypes inner = env;
      inner[ch->binder.var] = domain_ttype(tm.resolve(ch->binder.domain));
      RulePtr body = go(ch->body, inner);
      body = substitute(body, Binding{{ch->binder.var, call}}, fresh);
      return r_cond(t_isdef(call), std::move(body), go(ch->ifnone, env));
    }
    if (const auto* l = std::get_if<Let>(&r->node)) {
      VarTypes inner = env;
      for (const auto& b : l->bindings) {
        auto vt = infer_type(tm, b.value, env);
        if (!vt) throw FlattenError("internal error: untypable let value");
        inner[b.var] = *vt;
      }
      auto nb = go(l->body, inner);
      if (nb == l->body) return r;
      return std::make_shared<Rule>(Rule{Let{l->bindings, std::move(nb)}, r->span});
    }
    if (const auto* fa = std::get_if<Forall>(&r->node)) {
      VarTypes inner = env;
      for (const auto& b : fa->binders) inner[b.var] = domain_ttype(tm.resolve(b.domain));
      auto nb = go(fa->body, inner);
      if (nb == fa->body) return r;
      return std::make_shared<Rule>(Rule{Forall{fa->binders, fa->guard, std::move(nb)}, r->span});
    }
    return map_children(r, [&](const RulePtr& c) { return go(c, env); });
  };

  out.main_rule = go(tm.model.main_rule, {});
  for (auto& mac : out.macros) {
    VarTypes env;
    for (const auto& f : mac.formals) env[f.var] = domain_ttype(tm.resolve(f.domain));
    mac.body = go(mac.body, env);
  }
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// AR: argument removal

namespace {

// Dynamic arguments of controlled/monitored applications, in post-order so
// the first entry has no qualifying argument nested inside it.
void ar_candidates(const TypedModel& tm, const TermPtr& t, std::vector<TermPtr>& out) {
  if (!t) return;
  if (const auto* a = std::get_if<Apply>(&t->node)) {
    for (const auto& x : a->args) ar_candidates(tm, x, out);
    const FunctionDecl* decl = tm.decl(a->fn);
    if (decl &&
        (decl->kind == FunctionKind::Controlled || decl->kind == FunctionKind::Monitored)) {
      for (const auto& x : a->args)
        if (!is_literal(x) && !is_var(x)) out.push_back(x);
    }
    return;
  }
  if (const auto* b = std::get_if<Builtin>(&t->node)) {
    for (const auto& x : b->args) ar_candidates(tm, x, out);
    return;
  }
  if (const auto* i = std::get_if<IsDef>(&t->node)) ar_candidates(tm, i->arg, out);
  // ChooseOne guards are skipped: their binder scope cannot be lifted out.
}

// The node's own term positions, excluding guards that scope a binder.
std::vector<TermPtr> own_terms(const RulePtr& r) {
  std::vector<TermPtr> out;
  if (!r) return out;
  if (const auto* u = std::get_if<Update>(&r->node)) {
    out.push_back(u->target);
    out.push_back(u->value);
  } else if (const auto* c = std::get_if<Cond>(&r->node)) {
    out.push_back(c->guard);
  } else if (const auto* mc = std::get_if<MacroCall>(&r->node)) {
    for (const auto& a : mc->args) out.push_back(a);
  } else if (const auto* pc = std::get_if<ProgramCall>(&r->node)) {
    out.push_back(pc->agent);
  } else if (const auto* l = std::get_if<Let>(&r->node)) {
    for (const auto& b : l->bindings) out.push_back(b.value);
  } else if (const auto* cs = std::get_if<Case>(&r->node)) {
    out.push_back(cs->scrutinee);
    for (const auto& arm : cs->arms) out.push_back(arm.label);
  }
  return out;
}

} // namespace

PassOutcome pass_ar(const TypedModel& tm, FreshNames& fresh) {
  int64_t count = 0;
  std::function<RulePtr(const RulePtr&)> go = [&](const RulePtr& r) -> RulePtr {
    if (!r) return r;
    RulePtr current = map_children(r, go);
    // Lift this node's own dynamic arguments, deepest first; each lift wraps
    // the node in a one-binding let and rewrites every occurrence, so later
    // lifts may reference earlier variables (giving nested lets, outermost
    // binding first).
    std::vector<LetBinding> wraps;
    for (;;) {
      std::vector<TermPtr> cands;
      for (const auto& t : own_terms(current)) ar_candidates(tm, t, cands);
      if (cands.empty()) break;
      TermPtr cand = cands.front();
      std::string v = fresh.fresh();
      current = replace_term(current, cand, t_var(v));
      wraps.push_back({v, std::move(cand)});
      ++count;
    }
    for (auto it = wraps.rbegin(); it != wraps.rend(); ++it)
      current = r_let({{it->var, it->value}}, current);
    return current;
  };

  Model out = tm.model;
  out.main_rule = go(tm.model.main_rule);
  for (auto& mac : out.macros) mac.body = go(mac.body);
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// LR: let removal

PassOutcome pass_lr(const TypedModel& tm, FreshNames& fresh) {
  int64_t count = 0;
  int64_t produced = 0; // rule copies built by this pass, nested expansions included

  std::function<RulePtr(const RulePtr&, const VarTypes&)> go =
      [&](const RulePtr& r, const VarTypes& env) -> RulePtr {
    if (!r) return r;
    if (const auto* l = std::get_if<Let>(&r->node)) {
      ++count;
      // Candidate values per binding: the bound term's inferred domain. The
      // enumeration covers declared values only — a term that evaluates to
      // undef at runtime satisfies no branch guard (equality is total), which
      // is outside the supported fragment; the totality rules keep bound
      // terms defined.
      std::vector<std::vector<Value>> cands;
      int64_t total = 1;
      for (const auto& b : l->bindings) {
        auto vt = infer_type(tm, b.value, env);
        if (!vt) throw FlattenError("internal error: untypable let value");
        Domain d = ttype_domain(tm, *vt);
        int64_t card = d.cardinality();
        if (card <= 0 || total > kMaxExpansion / card)
          throw FlattenError("let expansion exceeds " + std::to_string(kMaxExpansion) +
                             " branches");
        total *= card;
        cands.push_back(enumerate_domain(d));
      }
      produced += total * std::max<int64_t>(1, count_rules(l->body).total());
      if (produced > kMaxExpansion)
        throw FlattenError("let expansion exceeds " + std::to_string(kMaxExpansion) +
                           " expanded rules");
      // Odometer over the candidate lists, leftmost binding most significant.
      std::vector<size_t> idx(l->bindings.size(), 0);
      std::vector<RulePtr> children;
      for (;;) {
        std::vector<TermPtr> parts;
        Binding sigma;
        for (size_t i = 0; i < l->bindings.size(); ++i) {
          const Value& v = cands[i][idx[i]];
          const TermPtr& val = l->bindings[i].value;
          parts.push_back(t_op(BuiltinOp::Eq, val, t_value(v)));
          sigma[l->bindings[i].var] = t_value(v);
        }
        auto body = go(substitute(l->body, sigma, fresh), env);
        children.push_back(r_cond(conj(parts), std::move(body)));
        size_t k = idx.size();
        while (k > 0 && ++idx[k - 1] == cands[k - 1].size()) idx[--k] = 0;
        if (k == 0) break;
      }
      return r_par(std::move(children));
    }
    if (const auto* fa = std::get_if<Forall>(&r->node)) {
      VarTypes inner = env;
      for (const auto& b : fa->binders) inner[b.var] = domain_ttype(tm.resolve(b.domain));
      auto nb = go(fa->body, inner);
      if (nb == fa->body) return r;
      return std::make_shared<Rule>(Rule{Forall{fa->binders, fa->guard, std::move(nb)}, r->span});
    }
    if (const auto* ch = std::get_if<Choose>(&r->node)) {
      VarTypes inner = env;
      inner[ch->binder.var] = domain_ttype(tm.resolve(ch->binder.domain));
      auto nb = go(ch->body, inner);
      auto ni = go(ch->ifnone, env);
      if (nb == ch->body && ni == ch->ifnone) return r;
      return std::make_shared<Rule>(
          Rule{Choose{ch->binder, ch->guard, std::move(nb), std::move(ni)}, r->span});
    }
    return map_children(r, [&](const RulePtr& c) { return go(c, env); });
  };

  Model out = tm.model;
  out.main_rule = go(tm.model.main_rule, {});
  for (auto& mac : out.macros) {
    VarTypes env;
    for (const auto& f : mac.formals) env[f.var] = domain_ttype(tm.resolve(f.domain));
    mac.body = go(mac.body, env);
  }
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// CaR: case removal

PassOutcome pass_car(const TypedModel& tm, FreshNames& fresh) {
  (void)fresh;
  int64_t count = 0;
  std::function<RulePtr(const RulePtr&)> go = [&](const RulePtr& r) -> RulePtr {
    if (!r) return r;
    if (const auto* cs = std::get_if<Case>(&r->node)) {
      ++count;
      // Every matching arm fires; the otherwise branch fires when no label
      // matches. Equality against labels is total, so an undefined selector
      // selects the undef label (if any) or the otherwise branch.
      std::vector<RulePtr> children;
      for (const auto& arm : cs->arms)
        children.push_back(
            r_cond(t_op(BuiltinOp::Eq, cs->scrutinee, arm.label), go(arm.rule)));
      if (cs->otherwise) {
        std::vector<TermPtr> parts;
        for (const auto& arm : cs->arms)
          parts.push_back(t_op(BuiltinOp::Ne, cs->scrutinee, arm.label));
        children.push_back(r_cond(conj(parts), go(cs->otherwise)));
      }
      return r_par(std::move(children));
    }
    return map_children(r, go);
  };

  Model out = tm.model;
  out.main_rule = go(tm.model.main_rule);
  for (auto& mac : out.macros) mac.body = go(mac.body);
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// NR: nesting removal

namespace {

// A normalized child of the top-level parallel block: either a bare update or
// a guarded block of updates. An empty update list keeps a guard whose
// evaluation must be preserved (it may fault).
struct NFChild {
  RulePtr update;               // set for a bare update
  TermPtr guard;                // otherwise: the merged guard ...
  std::vector<RulePtr> updates; // ... over these updates
};

std::vector<NFChild> nr_norm(const RulePtr& r) {
  if (!r) return {};
  if (std::holds_alternative<Update>(r->node)) return {NFChild{r, nullptr, {}}};
  if (std::holds_alternative<Skip>(r->node)) return {};
  if (const auto* p = std::get_if<Par>(&r->node)) {
    std::vector<NFChild> out;
    for (const auto& c : p->children) {
      auto sub = nr_norm(c);
      out.insert(out.end(), std::make_move_iterator(sub.begin()),
                 std::make_move_iterator(sub.end()));
    }
    return out;
  }
  if (const auto* c = std::get_if<Cond>(&r->node)) {
    auto guard_with = [](const TermPtr& g, std::vector<NFChild> children) {
      std::vector<NFChild> out;
      for (auto& ch : children) {
        if (ch.update) out.push_back(NFChild{nullptr, g, {ch.update}});
        else out.push_back(NFChild{nullptr, t_op(BuiltinOp::And, g, ch.guard), std::move(ch.updates)});
      }
      return out;
    };
    auto tn = guard_with(c->guard, nr_norm(c->then_rule));
    auto en = c->else_rule ? guard_with(t_not(c->guard), nr_norm(c->else_rule))
                           : std::vector<NFChild>{};
    if (tn.empty() && en.empty())
      return {NFChild{nullptr, c->guard, {}}}; // keep the guard evaluation
    tn.insert(tn.end(), std::make_move_iterator(en.begin()), std::make_move_iterator(en.end()));
    return tn;
  }
  throw FlattenError(std::string("normalization cannot handle a ") + rule_kind_label(r) +
                     "; run the earlier passes first");
}

} // namespace

PassOutcome pass_nr(const TypedModel& tm, FreshNames& fresh) {
  (void)fresh;
  Model out = tm.model;
  int before = max_nesting(tm.model.main_rule);
  std::vector<RulePtr> children;
  for (auto& ch : nr_norm(tm.model.main_rule)) {
    if (ch.update) {
      children.push_back(std::move(ch.update));
    } else {
      RulePtr body = ch.updates.size() == 1 ? std::move(ch.updates[0])
                                            : r_par(std::move(ch.updates));
      children.push_back(r_cond(std::move(ch.guard), std::move(body)));
    }
  }
  out.main_rule = r_par(std::move(children));
  int after = max_nesting(out.main_rule);
  return {std::move(out), before - after};
}

// --------------------------------------------------------------------------
// TS: term simplification

namespace {

std::optional<int64_t> checked_arith(BuiltinOp op, int64_t a, int64_t b) {
  __int128 r = 0;
  switch (op) {
    case BuiltinOp::Add: r = static_cast<__int128>(a) + b; break;
    case BuiltinOp::Sub: r = static_cast<__int128>(a) - b; break;
    case BuiltinOp::Mul: r = static_cast<__int128>(a) * b; break;
    default: return std::nullopt;
  }
  if (r < static_cast<__int128>(INT64_MIN) || r > static_cast<__int128>(INT64_MAX))
    return std::nullopt;
  return static_cast<int64_t>(r);
}

// The fold list. Left-literal connectives fold freely (evaluation is left to
// right with short-circuit); right-literal folds are restricted to the
// identity cases so the left operand's evaluation — and any selection draw or
// fault inside it — is preserved. X and false, X or true, X implies <lit>
// therefore never fold.
TermPtr ts_fold(const TypedModel& tm, const TermPtr& t, int64_t& count) {
  if (!t) return t;
  if (const auto* a = std::get_if<Apply>(&t->node)) {
    bool changed = false;
    std::vector<TermPtr> args;
    for (const auto& x : a->args) {
      auto nx = ts_fold(tm, x, count);
      changed |= nx != x;
      args.push_back(std::move(nx));
    }
    const FunctionDecl* decl = tm.decl(a->fn);
    if (decl && decl->kind == FunctionKind::Static &&
        std::all_of(args.begin(), args.end(), is_literal)) {
      std::vector<Value> vals;
      for (const auto& x : args) vals.push_back(*literal_value(x));
      if (auto v = static_eval(tm, a->fn, vals); v && !v->is_undef()) {
        ++count;
        return t_value(*v);
      }
    }
    if (!changed) return t;
    return std::make_shared<Term>(Term{Apply{a->fn, std::move(args)}, t->span});
  }
  if (const auto* b = std::get_if<Builtin>(&t->node)) {
    std::vector<TermPtr> args;
    bool changed = false;
    for (const auto& x : b->args) {
      auto nx = ts_fold(tm, x, count);
      changed |= nx != x;
      args.push_back(std::move(nx));
    }
    const TermPtr& l = args[0];
    const TermPtr& r = args.size() > 1 ? args[1] : args[0];
    auto lb = bool_literal(l);
    auto rb = args.size() > 1 ? bool_literal(r) : std::nullopt;
    switch (b->op) {
      case BuiltinOp::Not:
        if (lb) {
          ++count;
          return t_bool(!*lb);
        }
        break;
      case BuiltinOp::And:
        if (lb) {
          ++count;
          return *lb ? r : t_bool(false);
        }
        if (rb && *rb) {
          ++count;
          return l;
        }
        break;
      case BuiltinOp::Or:
        if (lb) {
          ++count;
          return *lb ? t_bool(true) : r;
        }
        if (rb && !*rb) {
          ++count;
          return l;
        }
        break;
      case BuiltinOp::Implies:
        if (lb) {
          ++count;
          return *lb ? r : t_bool(true);
        }
        break;
      case BuiltinOp::Eq:
      case BuiltinOp::Ne:
        if (is_literal(l) && is_literal(r)) {
          bool eq = *literal_value(l) == *literal_value(r);
          ++count;
          return t_bool(b->op == BuiltinOp::Eq ? eq : !eq);
        }
        break;
      case BuiltinOp::Lt:
      case BuiltinOp::Le:
      case BuiltinOp::Gt:
      case BuiltinOp::Ge: {
        const auto* li = std::get_if<IntLit>(&l->node);
        const auto* ri = std::get_if<IntLit>(&r->node);
        if (li && ri) {
          bool v = b->op == BuiltinOp::Lt   ? li->value < ri->value
                   : b->op == BuiltinOp::Le ? li->value <= ri->value
                   : b->op == BuiltinOp::Gt ? li->value > ri->value
                                            : li->value >= ri->value;
          ++count;
          return t_bool(v);
        }
        break;
      }
      case BuiltinOp::Add:
      case BuiltinOp::Sub:
      case BuiltinOp::Mul: {
        const auto* li = std::get_if<IntLit>(&l->node);
        const auto* ri = std::get_if<IntLit>(&r->node);
        if (li && ri) {
          if (auto v = checked_arith(b->op, li->value, ri->value)) {
            ++count;
            return t_int(*v);
          }
        }
        break;
      }
    }
    if (!changed) return t;
    return std::make_shared<Term>(Term{Builtin{b->op, std::move(args)}, t->span});
  }
  if (const auto* i = std::get_if<IsDef>(&t->node)) {
    auto na = ts_fold(tm, i->arg, count);
    if (is_literal(na)) {
      ++count;
      return t_bool(!std::holds_alternative<UndefLit>(na->node));
    }
    if (na == i->arg) return t;
    return std::make_shared<Term>(Term{IsDef{std::move(na)}, t->span});
  }
  if (const auto* c = std::get_if<ChooseOne>(&t->node)) {
    auto ng = ts_fold(tm, c->guard, count);
    auto nr = ts_fold(tm, c->result, count);
    if (ng == c->guard && nr == c->result) return t;
    return std::make_shared<Term>(
        Term{ChooseOne{c->var, c->domain, std::move(ng), std::move(nr)}, t->span});
  }
  return t;
}

} // namespace

PassOutcome pass_ts(const TypedModel& tm) {
  int64_t count = 0;
  Model out = tm.model;
  auto tf = [&](const TermPtr& t) { return ts_fold(tm, t, count); };
  for (;;) {
    int64_t before = count;
    out.main_rule = map_terms(out.main_rule, tf);
    for (auto& mac : out.macros) mac.body = map_terms(mac.body, tf);
    if (count == before) break;
  }
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// RS: rule simplification

namespace {

// The fixed rewrite list: splice nested parallels, drop skip children, turn
// an empty parallel into skip, splice out a single-child parallel, eliminate
// conditionals with a literal guard, drop skip else-branches. The main root
// keeps its parallel block, and a conditional branch keeps an empty parallel
// (it stands for a guarded empty update block). Guards that are not literals
// are never dropped: evaluating them can fault.
RulePtr rs_rule(const RulePtr& r, bool is_root, bool is_cond_branch, int64_t& count) {
  if (!r) return r;
  if (const auto* p = std::get_if<Par>(&r->node)) {
    std::vector<RulePtr> children;
    for (const auto& c : p->children) {
      auto nc = rs_rule(c, false, false, count);
      if (const auto* cp = std::get_if<Par>(&nc->node)) {
        ++count; // splice nested parallel
        for (const auto& gc : cp->children) children.push_back(gc);
        continue;
      }
      if (std::holds_alternative<Skip>(nc->node)) {
        ++count; // drop skip child
        continue;
      }
      children.push_back(std::move(nc));
    }
    if (!is_root && !is_cond_branch && children.empty()) {
      ++count;
      return r_skip();
    }
    if (!is_root && children.size() == 1) {
      ++count;
      return children[0];
    }
    bool changed = children.size() != p->children.size();
    for (size_t i = 0; !changed && i < children.size(); ++i)
      changed = children[i] != p->children[i];
    if (!changed) return r;
    return std::make_shared<Rule>(Rule{Par{std::move(children)}, r->span});
  }
  if (const auto* c = std::get_if<Cond>(&r->node)) {
    auto nt = rs_rule(c->then_rule, false, true, count);
    auto ne = rs_rule(c->else_rule, false, true, count);
    if (auto g = bool_literal(c->guard)) {
      ++count;
      if (*g) return nt;
      return ne ? ne : r_skip();
    }
    if (ne && std::holds_alternative<Skip>(ne->node)) {
      ++count;
      ne = nullptr;
    }
    if (nt == c->then_rule && ne == c->else_rule) return r;
    return std::make_shared<Rule>(Rule{Cond{c->guard, std::move(nt), std::move(ne)}, r->span});
  }
  return map_children(r, [&](const RulePtr& x) { return rs_rule(x, false, false, count); });
}

} // namespace

PassOutcome pass_rs(const TypedModel& tm) {
  int64_t count = 0;
  Model out = tm.model;
  for (;;) {
    int64_t before = count;
    out.main_rule = rs_rule(out.main_rule, true, false, count);
    for (auto& mac : out.macros) mac.body = rs_rule(mac.body, false, false, count);
    if (count == before) break;
  }
  return {std::move(out), count};
}

// --------------------------------------------------------------------------
// Pipeline

double PassStats::total_seconds() const {
  double s = 0;
  for (const auto& [k, v] : seconds) s += v;
  return s;
}

std::string PassStats::table() const {
  char buf[128];
  std::string out = "pass     count   seconds\n";
  int64_t total = 0;
  for (const auto& name : kAllPasses) {
    int64_t c = count(name);
    total += c;
    auto it = seconds.find(name);
    std::snprintf(buf, sizeof buf, "%-5s %9lld %9.3f\n", name.c_str(),
                  static_cast<long long>(c), it == seconds.end() ? 0.0 : it->second);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-5s %9lld %9.3f\n", "total", static_cast<long long>(total),
                total_seconds());
  out += buf;
  return out;
}

std::string PassStats::csv() const {
  std::string header, row;
  char buf[64];
  for (const auto& name : kAllPasses) {
    header += name + ",";
    row += std::to_string(count(name)) + ",";
  }
  std::snprintf(buf, sizeof buf, "%.3f", total_seconds());
  return header + "Time\n" + row + buf + "\n";
}

FlattenResult flatten_pipeline(const TypedModel& tm, const std::vector<std::string>& passes) {
  for (const auto& p : passes) {
    if (std::find(kAllPasses.begin(), kAllPasses.end(), p) == kAllPasses.end())
      throw FlattenError("unknown pass '" + p + "'");
  }
  {
    auto ar = std::find(passes.begin(), passes.end(), "AR");
    auto lr = std::find(passes.begin(), passes.end(), "LR");
    if (ar != passes.end() && lr != passes.end() && lr < ar)
      throw FlattenError("AR must run before LR");
  }

  std::vector<std::string> seq;
  for (const auto& p : passes.empty() ? kMainPasses : passes) {
    seq.push_back(p);
    if (p != "TS" && p != "RS") {
      seq.push_back("TS");
      seq.push_back("RS");
    }
  }

  FlattenResult out;
  for (const auto& name : kAllPasses) {
    out.stats.counts[name] = 0;
    out.stats.seconds[name] = 0.0;
  }

  Model cur = tm.model;
  TypedModel cur_tm = tm;
  FreshNames fresh = FreshNames::seeded_from(cur);

  for (const auto& name : seq) {
    auto t0 = std::chrono::steady_clock::now();
    PassOutcome po;
    if (name == "MCR") po = pass_mcr(cur_tm, fresh);
    else if (name == "FR") po = pass_fr(cur_tm, fresh);
    else if (name == "ChR") po = pass_chr(cur_tm, fresh);
    else if (name == "AR") po = pass_ar(cur_tm, fresh);
    else if (name == "LR") po = pass_lr(cur_tm, fresh);
    else if (name == "CaR") po = pass_car(cur_tm, fresh);
    else if (name == "NR") po = pass_nr(cur_tm, fresh);
    else if (name == "TS") po = pass_ts(cur_tm);
    else po = pass_rs(cur_tm);
    auto t1 = std::chrono::steady_clock::now();

    out.stats.counts[name] += po.count;
    out.stats.seconds[name] += std::chrono::duration<double>(t1 - t0).count();

    cur = std::move(po.model);
    if (count_rules(cur).total() > kMaxExpansion)
      throw FlattenError("model exceeds " + std::to_string(kMaxExpansion) + " rules after " +
                         name);
    CheckResult cr = check(cur);
    if (!cr.ok())
      throw FlattenError("internal error: model fails checking after " + name + ": " +
                         cr.errors.front().str());
    cur_tm = std::move(*cr.typed);
  }

  out.model = std::move(cur);
  return out;
}

} // namespace asmf
