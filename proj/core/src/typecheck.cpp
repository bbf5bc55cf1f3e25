#include "asmf/typecheck.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

namespace asmf {

namespace {

int64_t sat_i64(__int128 v) {
  if (v > static_cast<__int128>(INT64_MAX)) return INT64_MAX;
  if (v < static_cast<__int128>(INT64_MIN)) return INT64_MIN;
  return static_cast<int64_t>(v);
}

bool is_undef_lit(const TermPtr& t) {
  return t && std::holds_alternative<UndefLit>(t->node);
}

// Shared typing engine. When `diags` is null it only computes the type.
struct Typing {
  const TypedModel& tm;
  std::vector<Diagnostic>* diags;

  void err(const std::string& code, const std::string& msg, const SourceSpan& span) {
    if (diags) diags->push_back({code, msg, span.line, span.column});
  }

  std::optional<Domain> resolve_ref(const DomainRef& ref, const SourceSpan& span) {
    switch (ref.kind) {
      case DomainRef::Kind::Boolean:
        return Domain::boolean();
      case DomainRef::Kind::Range:
        if (ref.lo > ref.hi) {
          err("E_DOMAIN", "empty range " + ref.str(), span);
          return std::nullopt;
        }
        return Domain::int_range(ref.lo, ref.hi);
      case DomainRef::Kind::Named: {
        auto it = tm.domains.find(ref.name);
        if (it == tm.domains.end()) {
          err("E_UNRESOLVED", "unknown domain '" + ref.name + "'", span);
          return std::nullopt;
        }
        return it->second;
      }
    }
    return std::nullopt;
  }

  std::optional<TType> type_term(const TermPtr& t, const VarTypes& vars) {
    if (!t) return std::nullopt;
    struct V {
      Typing& s;
      const TermPtr& t;
      const VarTypes& vars;
      std::optional<TType> fail(const std::string& code, const std::string& msg) {
        s.err(code, msg, t->span);
        return std::nullopt;
      }
      std::optional<TType> operator()(const BoolLit&) { return TType::boolean(); }
      std::optional<TType> operator()(const IntLit& n) { return TType::integer(n.value, n.value); }
      std::optional<TType> operator()(const SymLit& sym) {
        auto it = s.tm.constant_owner.find(sym.value);
        if (it == s.tm.constant_owner.end())
          return fail("E_UNRESOLVED", "unknown constant '" + sym.value + "'");
        return TType::sym(it->second);
      }
      std::optional<TType> operator()(const UndefLit&) {
        return fail("E_TYPE", "'undef' may appear only under =, != or isDef");
      }
      std::optional<TType> operator()(const Var& v) {
        if (v.name == "self") {
          if (!s.tm.agent_domain)
            return fail("E_SELF", "'self' used but the model declares no agent set");
          return TType::sym(s.tm.agent_domain->name);
        }
        auto it = vars.find(v.name);
        if (it == vars.end()) return fail("E_UNRESOLVED", "unbound variable '" + v.name + "'");
        return it->second;
      }
      std::optional<TType> operator()(const Apply& a) {
        const FunctionDecl* decl = s.tm.decl(a.fn);
        if (!decl) return fail("E_UNRESOLVED", "unknown function '" + a.fn + "'");
        if (a.args.size() != decl->params.size())
          return fail("E_ARITY", "'" + a.fn + "' takes " + std::to_string(decl->params.size()) +
                                     " argument(s), got " + std::to_string(a.args.size()));
        bool ok = true;
        for (size_t i = 0; i < a.args.size(); ++i) {
          auto at = s.type_term(a.args[i], vars);
          auto pd = s.resolve_ref(decl->params[i], t->span);
          if (!at || !pd) {
            ok = false;
            continue;
          }
          if (!at->same_carrier(domain_ttype(*pd))) {
            s.err("E_TYPE",
                  "argument " + std::to_string(i + 1) + " of '" + a.fn + "' expects " + pd->str(),
                  a.args[i]->span);
            ok = false;
          }
        }
        auto rd = s.resolve_ref(decl->result, t->span);
        if (!ok || !rd) return std::nullopt;
        return domain_ttype(*rd);
      }
      std::optional<TType> operator()(const Builtin& b) {
        switch (b.op) {
          case BuiltinOp::And:
          case BuiltinOp::Or:
          case BuiltinOp::Implies: {
            auto l = s.type_term(b.args[0], vars);
            auto r = s.type_term(b.args[1], vars);
            if (!l || !r) return std::nullopt;
            if (l->tag != TType::Tag::Bool || r->tag != TType::Tag::Bool)
              return fail("E_TYPE", std::string("'") + builtin_name(b.op) +
                                        "' needs boolean operands");
            return TType::boolean();
          }
          case BuiltinOp::Not: {
            auto a = s.type_term(b.args[0], vars);
            if (!a) return std::nullopt;
            if (a->tag != TType::Tag::Bool) return fail("E_TYPE", "'not' needs a boolean operand");
            return TType::boolean();
          }
          case BuiltinOp::Eq:
          case BuiltinOp::Ne: {
            bool lu = is_undef_lit(b.args[0]), ru = is_undef_lit(b.args[1]);
            if (lu && ru) return TType::boolean();
            if (lu || ru) {
              auto other = s.type_term(b.args[lu ? 1 : 0], vars);
              if (!other) return std::nullopt;
              return TType::boolean();
            }
            auto l = s.type_term(b.args[0], vars);
            auto r = s.type_term(b.args[1], vars);
            if (!l || !r) return std::nullopt;
            if (!l->same_carrier(*r))
              return fail("E_TYPE", std::string("'") + builtin_name(b.op) +
                                        "' compares values of different domains");
            return TType::boolean();
          }
          case BuiltinOp::Lt:
          case BuiltinOp::Le:
          case BuiltinOp::Gt:
          case BuiltinOp::Ge: {
            auto l = s.type_term(b.args[0], vars);
            auto r = s.type_term(b.args[1], vars);
            if (!l || !r) return std::nullopt;
            if (l->tag != TType::Tag::Int || r->tag != TType::Tag::Int)
              return fail("E_TYPE", std::string("'") + builtin_name(b.op) +
                                        "' needs integer operands");
            return TType::boolean();
          }
          case BuiltinOp::Add:
          case BuiltinOp::Sub:
          case BuiltinOp::Mul: {
            auto l = s.type_term(b.args[0], vars);
            auto r = s.type_term(b.args[1], vars);
            if (!l || !r) return std::nullopt;
            if (l->tag != TType::Tag::Int || r->tag != TType::Tag::Int)
              return fail("E_TYPE", std::string("'") + builtin_name(b.op) +
                                        "' needs integer operands");
            __int128 a = l->lo, bb = l->hi, c = r->lo, d = r->hi;
            if (b.op == BuiltinOp::Add) return TType::integer(sat_i64(a + c), sat_i64(bb + d));
            if (b.op == BuiltinOp::Sub) return TType::integer(sat_i64(a - d), sat_i64(bb - c));
            __int128 p1 = a * c, p2 = a * d, p3 = bb * c, p4 = bb * d;
            __int128 lo = std::min(std::min(p1, p2), std::min(p3, p4));
            __int128 hi = std::max(std::max(p1, p2), std::max(p3, p4));
            return TType::integer(sat_i64(lo), sat_i64(hi));
          }
        }
        return std::nullopt;
      }
      std::optional<TType> operator()(const IsDef& i) {
        if (!is_undef_lit(i.arg) && !s.type_term(i.arg, vars)) return std::nullopt;
        return TType::boolean();
      }
      std::optional<TType> operator()(const ChooseOne& c) {
        auto dom = s.resolve_ref(c.domain, t->span);
        if (!dom) return std::nullopt;
        VarTypes inner = vars;
        inner[c.var] = domain_ttype(*dom);
        auto g = s.type_term(c.guard, inner);
        if (g && g->tag != TType::Tag::Bool)
          return fail("E_TYPE", "selection guard must be boolean");
        auto r = s.type_term(c.result, inner);
        if (!g || !r) return std::nullopt;
        return r;
      }
    };
    return std::visit(V{*this, t, vars}, t->node);
  }
};

struct Checker {
  const Model& m;
  std::vector<Diagnostic> errors;
  TypedModel tm;

  explicit Checker(const Model& model) : m(model) { tm.model = model; }

  void err(const std::string& code, const std::string& msg, const SourceSpan& span) {
    errors.push_back({code, msg, span.line, span.column});
  }

  Typing typing() { return Typing{tm, &errors}; }

  // --- phase 1: domains & constants --------------------------------------

  void collect_domains() {
    int agent_sets = 0;
    for (const auto& d : m.domains) {
      if (d.name.empty() || d.name == "Boolean") {
        err("E_DOMAIN", "invalid domain name '" + d.name + "'", {});
        continue;
      }
      if (!tm.domains.emplace(d.name, d).second) {
        err("E_DUPLICATE", "domain '" + d.name + "' declared twice", {});
        continue;
      }
      if (d.kind == Domain::Kind::IntRange && d.lo > d.hi)
        err("E_DOMAIN", "domain '" + d.name + "' is an empty range", {});
      if ((d.kind == Domain::Kind::Enum || d.kind == Domain::Kind::AgentSet) &&
          d.elements.empty())
        err("E_DOMAIN", "domain '" + d.name + "' has no elements", {});
      if (d.kind == Domain::Kind::Enum || d.kind == Domain::Kind::AgentSet) {
        for (const auto& e : d.elements) {
          if (!tm.constant_owner.emplace(e, d.name).second)
            err("E_DUPLICATE", "constant '" + e + "' belongs to more than one domain", {});
        }
      }
      if (d.kind == Domain::Kind::AgentSet) {
        ++agent_sets;
        tm.agent_domain = d;
      }
    }
    if (agent_sets > 1) {
      err("E_DOMAIN", "at most one agent set per model", {});
      tm.agent_domain.reset();
    }
  }

  // --- phase 2: function declarations ------------------------------------

  void collect_functions() {
    Typing ty = typing();
    for (const auto& f : m.functions) {
      if (!tm.decls.emplace(f.name, f).second) {
        err("E_DUPLICATE", "function '" + f.name + "' declared twice", f.span);
        continue;
      }
      for (const auto& p : f.params) ty.resolve_ref(p, f.span);
      ty.resolve_ref(f.result, f.span);
    }
  }

  // --- phase 3: macros (names first; bodies after defs) -------------------

  void collect_macro_names() {
    for (const auto& mac : m.macros) {
      if (tm.decls.count(mac.name)) {
        err("E_DUPLICATE", "'" + mac.name + "' is both a function and a rule", mac.span);
        continue;
      }
      if (!tm.macro_table.emplace(mac.name, mac).second)
        err("E_DUPLICATE", "rule '" + mac.name + "' declared twice", mac.span);
    }
  }

  // --- phase 4: definitions ----------------------------------------------

  void forbid_in_def(const TermPtr& t, bool is_static, const std::string& fname) {
    if (!t) return;
    struct V {
      Checker& c;
      const TermPtr& t;
      bool is_static;
      const std::string& fname;
      void go(const TermPtr& x) { c.forbid_in_def(x, is_static, fname); }
      void operator()(const BoolLit&) {}
      void operator()(const IntLit&) {}
      void operator()(const SymLit&) {}
      void operator()(const UndefLit&) {}
      void operator()(const Var& v) {
        if (v.name == "self")
          c.err("E_SELF", "'self' cannot appear in the definition of '" + fname + "'", t->span);
      }
      void operator()(const Apply& a) {
        if (is_static) {
          const FunctionDecl* d = c.tm.decl(a.fn);
          if (d && d->kind != FunctionKind::Static)
            c.err("E_DEF",
                  "static '" + fname + "' reads " +
                      std::string(function_kind_name(d->kind)) + " '" + a.fn + "'",
                  t->span);
        }
        for (const auto& x : a.args) go(x);
      }
      void operator()(const Builtin& b) {
        for (const auto& x : b.args) go(x);
      }
      void operator()(const IsDef& i) { go(i.arg); }
      void operator()(const ChooseOne& ch) {
        if (is_static)
          c.err("E_DEF", "static '" + fname + "' cannot contain a selection", t->span);
        go(ch.guard);
        go(ch.result);
      }
    };
    std::visit(V{*this, t, is_static, fname}, t->node);
  }

  void collect_defs() {
    Typing ty = typing();
    for (const auto& def : m.definitions) {
      const FunctionDecl* decl = tm.decl(def.name);
      if (!decl) {
        err("E_DEF", "definition for undeclared function '" + def.name + "'", def.span);
        continue;
      }
      if (decl->kind == FunctionKind::Monitored || decl->kind == FunctionKind::Controlled) {
        err("E_DEF",
            std::string(function_kind_name(decl->kind)) + " '" + def.name +
                "' cannot have a definition",
            def.span);
        continue;
      }
      if (!tm.defs.emplace(def.name, def).second) {
        err("E_DUPLICATE", "function '" + def.name + "' defined twice", def.span);
        continue;
      }
      std::vector<Domain> params;
      bool params_ok = true;
      for (const auto& p : decl->params) {
        auto d = ty.resolve_ref(p, decl->span);
        if (!d) params_ok = false;
        else params.push_back(*d);
      }
      auto result = ty.resolve_ref(decl->result, decl->span);
      if (!params_ok || !result) continue;

      if (def.is_table) {
        if (decl->kind != FunctionKind::Static) {
          err("E_DEF", "only static functions can be defined by a table", def.span);
          continue;
        }
        std::set<std::vector<Value>> seen;
        for (const auto& entry : def.entries) {
          if (entry.args.size() != params.size()) {
            err("E_ARITY",
                "table entry for '" + def.name + "' has " + std::to_string(entry.args.size()) +
                    " argument(s), expected " + std::to_string(params.size()),
                def.span);
            continue;
          }
          for (size_t i = 0; i < entry.args.size(); ++i) {
            if (!params[i].contains(entry.args[i]))
              err("E_DOMAIN",
                  "table argument " + entry.args[i].str() + " outside " + params[i].str(),
                  def.span);
          }
          if (entry.value.is_undef())
            err("E_DEF", "table for '" + def.name + "' maps an entry to undef; definitions must be total",
                def.span);
          else if (!result->contains(entry.value))
            err("E_DOMAIN", "table value " + entry.value.str() + " outside " + result->str(),
                def.span);
          if (!seen.insert(entry.args).second)
            err("E_DUPLICATE", "duplicate table entry for '" + def.name + "'", def.span);
        }
        int64_t tuples = 1;
        for (const auto& p : params) {
          int64_t card = p.cardinality();
          constexpr int64_t kMax = std::numeric_limits<int64_t>::max();
          tuples = (card <= 0 || tuples > kMax / card) ? kMax : tuples * card;
        }
        if (static_cast<int64_t>(seen.size()) < tuples) {
          std::string detail;
          if (tuples <= 4096) {
            for (const auto& args : domain_product(params)) {
              if (!seen.count(args)) {
                detail = "; no entry for " + Location{def.name, args}.str();
                break;
              }
            }
          } else {
            detail = "; " + std::to_string(seen.size()) + " of " + std::to_string(tuples) +
                     " argument tuples covered";
          }
          err("E_DEF", "table for '" + def.name + "' is partial" + detail, def.span);
        }
        continue;
      }

      // term form
      if (def.formals.size() != params.size()) {
        err("E_DEF",
            "'" + def.name + "' is declared with " + std::to_string(params.size()) +
                " parameter(s) but defined with " + std::to_string(def.formals.size()),
            def.span);
        continue;
      }
      VarTypes vars;
      bool formals_ok = true;
      std::set<std::string> formal_names;
      for (size_t i = 0; i < def.formals.size(); ++i) {
        auto fd = ty.resolve_ref(def.formals[i].domain, def.span);
        if (!fd) {
          formals_ok = false;
          continue;
        }
        if (!(fd->kind == params[i].kind && fd->name == params[i].name && fd->lo == params[i].lo &&
              fd->hi == params[i].hi && fd->elements == params[i].elements)) {
          err("E_DEF",
              "parameter " + def.formals[i].var + " of '" + def.name + "' is declared as " +
                  params[i].str() + " but defined over " + fd->str(),
              def.span);
          formals_ok = false;
        }
        if (!formal_names.insert(def.formals[i].var).second) {
          err("E_DUPLICATE", "duplicate parameter '" + def.formals[i].var + "'", def.span);
          formals_ok = false;
        }
        vars[def.formals[i].var] = domain_ttype(params[i]);
      }
      if (!formals_ok || !def.body) continue;
      forbid_in_def(def.body, decl->kind == FunctionKind::Static, def.name);
      auto bt = ty.type_term(def.body, vars);
      if (!bt) continue;
      TType want = domain_ttype(*result);
      if (!bt->same_carrier(want)) {
        err("E_TYPE", "definition of '" + def.name + "' does not produce " + result->str(),
            def.span);
      } else if (bt->tag == TType::Tag::Int && (bt->lo < want.lo || bt->hi > want.hi)) {
        err("E_DOMAIN",
            "definition of '" + def.name + "' can produce [" + std::to_string(bt->lo) + ", " +
                std::to_string(bt->hi) + "], outside " + result->str(),
            def.span);
      }
    }
    for (const auto& [name, decl] : tm.decls) {
      if ((decl.kind == FunctionKind::Static || decl.kind == FunctionKind::Derived) &&
          !tm.defs.count(name))
        err("E_DEF", std::string(function_kind_name(decl.kind)) + " '" + name +
                         "' has no definition",
            decl.span);
    }
  }

  // --- phase 5: definition dependency cycles ------------------------------

  void check_def_cycles() {
    // DFS over static/derived -> static/derived reads
    std::map<std::string, int> state; // 0 unvisited, 1 on stack, 2 done
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
      int& st = state[name];
      if (st == 2) return;
      if (st == 1) {
        err("E_CYCLE", "definition of '" + name + "' depends on itself", {});
        st = 2;
        return;
      }
      st = 1;
      const FunctionDef* def = tm.def(name);
      if (def && def->body) {
        std::function<void(const TermPtr&)> walk = [&](const TermPtr& t) {
          if (!t) return;
          if (const auto* a = std::get_if<Apply>(&t->node)) {
            if (tm.def(a->fn)) visit(a->fn);
            for (const auto& x : a->args) walk(x);
            return;
          }
          if (const auto* b = std::get_if<Builtin>(&t->node)) {
            for (const auto& x : b->args) walk(x);
            return;
          }
          if (const auto* i = std::get_if<IsDef>(&t->node)) return walk(i->arg);
          if (const auto* c = std::get_if<ChooseOne>(&t->node)) {
            walk(c->guard);
            walk(c->result);
            return;
          }
        };
        walk(def->body);
      }
      st = 2;
    };
    for (const auto& [name, def] : tm.defs) {
      (void)def;
      visit(name);
    }
  }

  // Rule call graph: macro calls by name, program dispatch through the bound
  // agent program. Call-by-name expansion requires this graph to be acyclic.
  void rule_callees(const RulePtr& r, const std::function<void(const std::string&)>& on_call) {
    if (!r) return;
    if (const auto* p = std::get_if<Par>(&r->node)) {
      for (const auto& x : p->children) rule_callees(x, on_call);
    } else if (const auto* c = std::get_if<Cond>(&r->node)) {
      rule_callees(c->then_rule, on_call), rule_callees(c->else_rule, on_call);
    } else if (const auto* mc = std::get_if<MacroCall>(&r->node)) {
      on_call(mc->name);
    } else if (std::get_if<ProgramCall>(&r->node)) {
      if (tm.agent_domain) {
        auto it = tm.agent_program.find(tm.agent_domain->name);
        if (it != tm.agent_program.end()) on_call(it->second);
      }
    } else if (const auto* f = std::get_if<Forall>(&r->node)) {
      rule_callees(f->body, on_call);
    } else if (const auto* ch = std::get_if<Choose>(&r->node)) {
      rule_callees(ch->body, on_call), rule_callees(ch->ifnone, on_call);
    } else if (const auto* l = std::get_if<Let>(&r->node)) {
      rule_callees(l->body, on_call);
    } else if (const auto* cs = std::get_if<Case>(&r->node)) {
      for (const auto& arm : cs->arms) rule_callees(arm.rule, on_call);
      rule_callees(cs->otherwise, on_call);
    }
  }

  void check_macro_cycles() {
    std::map<std::string, int> state; // 0 unvisited, 1 on stack, 2 done
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
      int& st = state[name];
      if (st == 2) return;
      if (st == 1) {
        err("E_CYCLE", "rule '" + name + "' calls itself", {});
        st = 2;
        return;
      }
      st = 1;
      if (const MacroDecl* mac = tm.macro(name)) rule_callees(mac->body, visit);
      st = 2;
    };
    for (const auto& mac : m.macros) visit(mac.name);
  }

  // --- phase 6: rules -----------------------------------------------------

  // Selection terms draw from the run's choice source; confining them to
  // derived definitions (memoized per step) keeps one draw per location read
  // no matter how often expansion duplicates the reading term.
  void forbid_picks(const TermPtr& t) {
    if (!t) return;
    struct V {
      Checker& c;
      const TermPtr& t;
      void go(const TermPtr& x) { c.forbid_picks(x); }
      void operator()(const BoolLit&) {}
      void operator()(const IntLit&) {}
      void operator()(const SymLit&) {}
      void operator()(const UndefLit&) {}
      void operator()(const Var&) {}
      void operator()(const Apply& a) {
        for (const auto& x : a.args) go(x);
      }
      void operator()(const Builtin& b) {
        for (const auto& x : b.args) go(x);
      }
      void operator()(const IsDef& i) { go(i.arg); }
      void operator()(const ChooseOne& ch) {
        c.err("E_TYPE", "selection terms are allowed only in derived function definitions",
              t->span);
        go(ch.guard), go(ch.result);
      }
    };
    std::visit(V{*this, t}, t->node);
  }

  void forbid_picks_in_rule(const RulePtr& r) {
    if (!r) return;
    struct V {
      Checker& c;
      void rec(const RulePtr& x) { c.forbid_picks_in_rule(x); }
      void operator()(const Update& u) { c.forbid_picks(u.target), c.forbid_picks(u.value); }
      void operator()(const Par& p) {
        for (const auto& x : p.children) rec(x);
      }
      void operator()(const Cond& cond) {
        c.forbid_picks(cond.guard), rec(cond.then_rule), rec(cond.else_rule);
      }
      void operator()(const MacroCall& mc) {
        for (const auto& a : mc.args) c.forbid_picks(a);
      }
      void operator()(const ProgramCall& pc) { c.forbid_picks(pc.agent); }
      void operator()(const Forall& f) { c.forbid_picks(f.guard), rec(f.body); }
      void operator()(const Choose& ch) {
        c.forbid_picks(ch.guard), rec(ch.body), rec(ch.ifnone);
      }
      void operator()(const Let& l) {
        for (const auto& b : l.bindings) c.forbid_picks(b.value);
        rec(l.body);
      }
      void operator()(const Case& cs) {
        c.forbid_picks(cs.scrutinee);
        for (const auto& arm : cs.arms) c.forbid_picks(arm.label), rec(arm.rule);
        rec(cs.otherwise);
      }
      void operator()(const Skip&) {}
    };
    std::visit(V{*this}, r->node);
  }

  void check_rule(const RulePtr& r, const VarTypes& vars) {
    if (!r) return;
    Typing ty = typing();
    struct V {
      Checker& c;
      Typing& ty;
      const RulePtr& r;
      const VarTypes& vars;

      void sub(const RulePtr& x, const VarTypes& v) { c.check_rule(x, v); }

      void check_bool(const TermPtr& t, const VarTypes& v, const char* what) {
        auto g = ty.type_term(t, v);
        if (g && g->tag != TType::Tag::Bool)
          c.err("E_TYPE", std::string(what) + " must be boolean", t ? t->span : r->span);
      }

      void operator()(const Update& u) {
        const Apply* target = u.target ? std::get_if<Apply>(&u.target->node) : nullptr;
        if (!target) {
          c.err("E_UPDATE_TARGET", "update target must be a function location", r->span);
          return;
        }
        const FunctionDecl* decl = c.tm.decl(target->fn);
        if (!decl) {
          c.err("E_UNRESOLVED", "unknown function '" + target->fn + "'", u.target->span);
          return;
        }
        if (decl->kind != FunctionKind::Controlled) {
          c.err("E_UPDATE_TARGET",
                "cannot update " + std::string(function_kind_name(decl->kind)) + " '" +
                    target->fn + "'",
                u.target->span);
          return;
        }
        auto tt = ty.type_term(u.target, vars); // checks args against params
        auto vt = ty.type_term(u.value, vars);
        if (tt && vt && !tt->same_carrier(*vt))
          c.err("E_TYPE", "value assigned to '" + target->fn + "' has the wrong domain",
                u.value->span);
      }
      void operator()(const Par& p) {
        for (const auto& x : p.children) sub(x, vars);
      }
      void operator()(const Cond& cond) {
        check_bool(cond.guard, vars, "condition");
        sub(cond.then_rule, vars);
        sub(cond.else_rule, vars);
      }
      void operator()(const MacroCall& mc) {
        const MacroDecl* mac = c.tm.macro(mc.name);
        if (!mac) {
          c.err("E_UNRESOLVED", "unknown rule '" + mc.name + "'", r->span);
          return;
        }
        if (mc.args.size() != mac->formals.size()) {
          c.err("E_ARITY",
                "rule '" + mc.name + "' takes " + std::to_string(mac->formals.size()) +
                    " argument(s), got " + std::to_string(mc.args.size()),
                r->span);
          return;
        }
        for (size_t i = 0; i < mc.args.size(); ++i) {
          auto at = ty.type_term(mc.args[i], vars);
          auto fd = ty.resolve_ref(mac->formals[i].domain, mac->span);
          if (at && fd && !at->same_carrier(domain_ttype(*fd)))
            c.err("E_TYPE",
                  "argument " + std::to_string(i + 1) + " of rule '" + mc.name + "' expects " +
                      fd->str(),
                  mc.args[i]->span);
        }
      }
      void operator()(const ProgramCall& pc) {
        if (!c.tm.agent_domain) {
          c.err("E_UNRESOLVED", "program dispatch needs an agent set", r->span);
          return;
        }
        if (!c.tm.agent_program.count(c.tm.agent_domain->name))
          c.err("E_UNRESOLVED",
                "no program bound for agent set '" + c.tm.agent_domain->name + "'", r->span);
        auto at = ty.type_term(pc.agent, vars);
        if (at && !(at->tag == TType::Tag::Sym && at->domain_name == c.tm.agent_domain->name))
          c.err("E_TYPE", "program dispatch needs an agent", pc.agent->span);
      }
      void operator()(const Forall& f) {
        VarTypes inner = vars;
        std::set<std::string> names;
        for (const auto& b : f.binders) {
          if (!names.insert(b.var).second)
            c.err("E_DUPLICATE", "duplicate variable '" + b.var + "'", r->span);
          auto d = ty.resolve_ref(b.domain, r->span);
          if (d) inner[b.var] = domain_ttype(*d);
        }
        check_bool(f.guard, inner, "guard");
        sub(f.body, inner);
      }
      void operator()(const Choose& ch) {
        VarTypes inner = vars;
        auto d = ty.resolve_ref(ch.binder.domain, r->span);
        if (d) inner[ch.binder.var] = domain_ttype(*d);
        check_bool(ch.guard, inner, "guard");
        sub(ch.body, inner);
        sub(ch.ifnone, vars); // binder not in scope
      }
      void operator()(const Let& l) {
        VarTypes inner = vars;
        std::set<std::string> names;
        for (const auto& b : l.bindings) {
          if (!names.insert(b.var).second)
            c.err("E_DUPLICATE", "duplicate variable '" + b.var + "'", r->span);
          auto vt = ty.type_term(b.value, vars); // values typed in the outer scope
          if (vt) inner[b.var] = *vt;
        }
        sub(l.body, inner);
      }
      void operator()(const Case& cs) {
        auto st = ty.type_term(cs.scrutinee, vars);
        for (const auto& arm : cs.arms) {
          if (is_undef_lit(arm.label)) {
            sub(arm.rule, vars);
            continue;
          }
          auto lt = ty.type_term(arm.label, vars);
          if (st && lt && !st->same_carrier(*lt))
            c.err("E_TYPE", "case label domain differs from the selector", arm.label->span);
          sub(arm.rule, vars);
        }
        sub(cs.otherwise, vars);
      }
      void operator()(const Skip&) {}
    };
    std::visit(V{*this, ty, r, vars}, r->node);
  }

  void check_macros_and_main() {
    Typing ty = typing();
    for (const auto& mac : m.macros) {
      VarTypes vars;
      std::set<std::string> names;
      for (const auto& f : mac.formals) {
        if (!names.insert(f.var).second)
          err("E_DUPLICATE", "duplicate parameter '" + f.var + "'", mac.span);
        auto d = ty.resolve_ref(f.domain, mac.span);
        if (d) vars[f.var] = domain_ttype(*d);
      }
      check_rule(mac.body, vars);
      forbid_picks_in_rule(mac.body);
    }
    if (!m.main_rule) {
      err("E_NO_MAIN", "the model has no main rule", {});
    } else {
      check_rule(m.main_rule, {});
      forbid_picks_in_rule(m.main_rule);
    }
  }

  // --- phase 7: agent bindings -------------------------------------------

  void collect_agents() {
    for (const auto& binding : m.programs) {
      auto it = tm.domains.find(binding.agent_set);
      if (it == tm.domains.end() || it->second.kind != Domain::Kind::AgentSet) {
        err("E_UNRESOLVED", "'" + binding.agent_set + "' is not an agent set", binding.span);
        continue;
      }
      const MacroDecl* mac = tm.macro(binding.macro);
      if (!mac) {
        err("E_UNRESOLVED", "unknown rule '" + binding.macro + "'", binding.span);
        continue;
      }
      if (!mac->formals.empty())
        err("E_ARITY", "agent program '" + binding.macro + "' must take no arguments",
            binding.span);
      if (!tm.agent_program.emplace(binding.agent_set, binding.macro).second)
        err("E_DUPLICATE", "agent set '" + binding.agent_set + "' bound twice", binding.span);
    }
  }

  // --- phase 8: init ------------------------------------------------------

  void check_init() {
    std::set<Location> seen;
    for (const auto& entry : m.init) {
      const FunctionDecl* decl = tm.decl(entry.fn);
      if (!decl) {
        err("E_UNRESOLVED", "unknown function '" + entry.fn + "'", entry.span);
        continue;
      }
      if (decl->kind != FunctionKind::Controlled) {
        err("E_PARTIAL_INIT",
            "only controlled functions are initialized; '" + entry.fn + "' is " +
                function_kind_name(decl->kind),
            entry.span);
        continue;
      }
      std::vector<Domain> params = tm.param_domains(*decl);
      Domain result = tm.result_domain(*decl);
      if (entry.args.size() != params.size()) {
        err("E_ARITY",
            "'" + entry.fn + "' takes " + std::to_string(params.size()) + " argument(s), got " +
                std::to_string(entry.args.size()),
            entry.span);
        continue;
      }
      bool args_ok = true;
      for (size_t i = 0; i < entry.args.size(); ++i) {
        if (!params[i].contains(entry.args[i])) {
          err("E_DOMAIN", "argument " + entry.args[i].str() + " outside " + params[i].str(),
              entry.span);
          args_ok = false;
        }
      }
      if (!entry.value.is_undef() && !result.contains(entry.value))
        err("E_DOMAIN", "initial value " + entry.value.str() + " outside " + result.str(),
            entry.span);
      if (args_ok && !seen.insert({entry.fn, entry.args}).second)
        err("E_PARTIAL_INIT", "location " + Location{entry.fn, entry.args}.str() +
                                  " initialized twice",
            entry.span);
    }
    // totality
    size_t missing = 0;
    std::string first_missing;
    for (const auto& loc : tm.locations_of_kind(FunctionKind::Controlled)) {
      if (!seen.count(loc)) {
        if (missing == 0) first_missing = loc.str();
        ++missing;
      }
    }
    if (missing > 0)
      err("E_PARTIAL_INIT",
          std::to_string(missing) + " controlled location(s) not initialized, first: " +
              first_missing,
          {});
  }

  // --- phase 9: invariants ------------------------------------------------

  void check_invariants() {
    Typing ty = typing();
    std::set<std::string> names;
    for (const auto& inv : m.invariants) {
      if (!names.insert(inv.name).second)
        err("E_DUPLICATE", "invariant '" + inv.name + "' declared twice", inv.span);
      auto t = ty.type_term(inv.condition, {});
      if (t && t->tag != TType::Tag::Bool)
        err("E_TYPE", "invariant '" + inv.name + "' must be boolean", inv.span);
      forbid_picks(inv.condition);
    }
  }

  // --- phase 10: `self` placement ----------------------------------------

  bool term_mentions_self(const TermPtr& t) {
    if (!t) return false;
    struct V {
      Checker& c;
      bool operator()(const BoolLit&) { return false; }
      bool operator()(const IntLit&) { return false; }
      bool operator()(const SymLit&) { return false; }
      bool operator()(const UndefLit&) { return false; }
      bool operator()(const Var& v) { return v.name == "self"; }
      bool operator()(const Apply& a) {
        for (const auto& x : a.args)
          if (c.term_mentions_self(x)) return true;
        return false;
      }
      bool operator()(const Builtin& b) {
        for (const auto& x : b.args)
          if (c.term_mentions_self(x)) return true;
        return false;
      }
      bool operator()(const IsDef& i) { return c.term_mentions_self(i.arg); }
      bool operator()(const ChooseOne& ch) {
        return c.term_mentions_self(ch.guard) || c.term_mentions_self(ch.result);
      }
    };
    return std::visit(V{*this}, t->node);
  }

  // Walks rules reachable from the main rule without passing a program
  // dispatch; `self` found there can never be bound.
  void check_self_placement() {
    std::set<std::string> visited;
    std::function<void(const RulePtr&)> walk = [&](const RulePtr& r) {
      if (!r) return;
      struct V {
        Checker& c;
        const RulePtr& r;
        std::set<std::string>& visited;
        std::function<void(const RulePtr&)>& walk;
        void self_in(const TermPtr& t) {
          if (c.term_mentions_self(t))
            c.err("E_SELF", "'self' is bound only under program dispatch", t->span);
        }
        void operator()(const Update& u) { self_in(u.target), self_in(u.value); }
        void operator()(const Par& p) {
          for (const auto& x : p.children) walk(x);
        }
        void operator()(const Cond& cond) {
          self_in(cond.guard), walk(cond.then_rule), walk(cond.else_rule);
        }
        void operator()(const MacroCall& mc) {
          for (const auto& a : mc.args) self_in(a);
          if (visited.insert(mc.name).second) {
            const MacroDecl* mac = c.tm.macro(mc.name);
            if (mac) walk(mac->body);
          }
        }
        void operator()(const ProgramCall& pc) {
          self_in(pc.agent); // the dispatch argument itself runs without self
        }
        void operator()(const Forall& f) { self_in(f.guard), walk(f.body); }
        void operator()(const Choose& ch) {
          self_in(ch.guard), walk(ch.body), walk(ch.ifnone);
        }
        void operator()(const Let& l) {
          for (const auto& b : l.bindings) self_in(b.value);
          walk(l.body);
        }
        void operator()(const Case& cs) {
          self_in(cs.scrutinee);
          for (const auto& arm : cs.arms) self_in(arm.label), walk(arm.rule);
          walk(cs.otherwise);
        }
        void operator()(const Skip&) {}
      };
      std::visit(V{*this, r, visited, walk}, r->node);
    };
    walk(m.main_rule);
  }
};

} // namespace

Domain TypedModel::resolve(const DomainRef& ref) const {
  switch (ref.kind) {
    case DomainRef::Kind::Boolean: return Domain::boolean();
    case DomainRef::Kind::Range: return Domain::int_range(ref.lo, ref.hi);
    case DomainRef::Kind::Named: return domains.at(ref.name);
  }
  return Domain::boolean();
}

std::vector<Domain> TypedModel::param_domains(const FunctionDecl& d) const {
  std::vector<Domain> out;
  out.reserve(d.params.size());
  for (const auto& p : d.params) out.push_back(resolve(p));
  return out;
}

Domain TypedModel::result_domain(const FunctionDecl& d) const { return resolve(d.result); }

std::vector<Location> TypedModel::locations_of_kind(FunctionKind kind) const {
  std::vector<Location> out;
  for (const auto& [name, decl] : decls) {
    if (decl.kind != kind) continue;
    for (auto& args : domain_product(param_domains(decl))) out.push_back({name, std::move(args)});
  }
  return out;
}

TType domain_ttype(const Domain& d) {
  switch (d.kind) {
    case Domain::Kind::Boolean: return TType::boolean();
    case Domain::Kind::IntRange: return TType::integer(d.lo, d.hi);
    case Domain::Kind::Enum:
    case Domain::Kind::AgentSet: return TType::sym(d.name);
  }
  return TType::boolean();
}

Domain ttype_domain(const TypedModel& tm, const TType& t) {
  switch (t.tag) {
    case TType::Tag::Bool: return Domain::boolean();
    case TType::Tag::Int: return Domain::int_range(t.lo, t.hi);
    case TType::Tag::Sym: return tm.domains.at(t.domain_name);
  }
  return Domain::boolean();
}

std::optional<TType> infer_type(const TypedModel& tm, const TermPtr& t, const VarTypes& vars) {
  Typing ty{tm, nullptr};
  return ty.type_term(t, vars);
}

CheckResult check(const Model& m) {
  Checker c(m);
  c.collect_domains();
  c.collect_functions();
  c.collect_macro_names();
  c.collect_agents();
  c.collect_defs();
  c.check_def_cycles();
  c.check_macro_cycles();
  c.check_macros_and_main();
  c.check_init();
  c.check_invariants();
  c.check_self_placement();

  CheckResult out;
  out.errors = std::move(c.errors);
  if (out.errors.empty()) out.typed = std::move(c.tm);
  return out;
}

} // namespace asmf
