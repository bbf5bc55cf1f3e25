#include "asmf/subst.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

namespace asmf {

namespace {

void collect_free_term(const TermPtr& t, std::set<std::string>& bound, std::set<std::string>& out);

void collect_free_rule(const RulePtr& r, std::set<std::string>& bound, std::set<std::string>& out) {
  if (!r) return;
  struct V {
    std::set<std::string>& bound;
    std::set<std::string>& out;
    void term(const TermPtr& t) { collect_free_term(t, bound, out); }
    void rule(const RulePtr& r) { collect_free_rule(r, bound, out); }
    // Runs f with extra names bound, then restores.
    void scoped(const std::vector<std::string>& names, const std::function<void()>& f) {
      std::vector<std::string> added;
      for (const auto& n : names)
        if (bound.insert(n).second) added.push_back(n);
      f();
      for (const auto& n : added) bound.erase(n);
    }
    void operator()(const Update& u) {
      term(u.target);
      term(u.value);
    }
    void operator()(const Par& p) {
      for (const auto& c : p.children) rule(c);
    }
    void operator()(const Cond& c) {
      term(c.guard);
      rule(c.then_rule);
      rule(c.else_rule);
    }
    void operator()(const MacroCall& m) {
      for (const auto& a : m.args) term(a);
    }
    void operator()(const ProgramCall& p) { term(p.agent); }
    void operator()(const Forall& f) {
      std::vector<std::string> names;
      for (const auto& b : f.binders) names.push_back(b.var);
      scoped(names, [&] {
        term(f.guard);
        rule(f.body);
      });
    }
    void operator()(const Choose& c) {
      scoped({c.binder.var}, [&] {
        term(c.guard);
        rule(c.body);
      });
      rule(c.ifnone); // binder is not in scope in the ifnone branch
    }
    void operator()(const Let& l) {
      for (const auto& b : l.bindings) term(b.value);
      std::vector<std::string> names;
      for (const auto& b : l.bindings) names.push_back(b.var);
      scoped(names, [&] { rule(l.body); });
    }
    void operator()(const Case& c) {
      term(c.scrutinee);
      for (const auto& arm : c.arms) {
        term(arm.label);
        rule(arm.rule);
      }
      rule(c.otherwise);
    }
    void operator()(const Skip&) {}
  };
  std::visit(V{bound, out}, r->node);
}

void collect_free_term(const TermPtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
  if (!t) return;
  struct V {
    std::set<std::string>& bound;
    std::set<std::string>& out;
    void term(const TermPtr& t) { collect_free_term(t, bound, out); }
    void operator()(const BoolLit&) {}
    void operator()(const IntLit&) {}
    void operator()(const SymLit&) {}
    void operator()(const UndefLit&) {}
    void operator()(const Var& v) {
      if (!bound.count(v.name)) out.insert(v.name);
    }
    void operator()(const Apply& a) {
      for (const auto& x : a.args) term(x);
    }
    void operator()(const Builtin& b) {
      for (const auto& x : b.args) term(x);
    }
    void operator()(const IsDef& i) { term(i.arg); }
    void operator()(const ChooseOne& c) {
      bool added = bound.insert(c.var).second;
      term(c.guard);
      term(c.result);
      if (added) bound.erase(c.var);
    }
  };
  std::visit(V{bound, out}, t->node);
}

uint64_t flat_index_of(const std::string& name) {
  constexpr const char prefix[] = "$flat_";
  if (name.rfind(prefix, 0) != 0) return 0;
  const char* digits = name.c_str() + sizeof(prefix) - 1;
  if (*digits == '\0') return 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(digits, &end, 10);
  if (end == nullptr || *end != '\0') return 0;
  return v;
}

struct Subst {
  FreshNames& fresh;

  // Set of free variables across all images of the binding; used for capture
  // detection at binder nodes.
  static std::set<std::string> image_free(const Binding& b) {
    std::set<std::string> out;
    for (const auto& [k, v] : b) {
      (void)k;
      auto fv = free_variables(v);
      out.insert(fv.begin(), fv.end());
    }
    return out;
  }

  TermPtr term(const TermPtr& t, const Binding& sigma) {
    if (!t || sigma.empty()) return t;
    struct V {
      Subst& s;
      const TermPtr& t;
      const Binding& sigma;
      TermPtr operator()(const BoolLit&) { return t; }
      TermPtr operator()(const IntLit&) { return t; }
      TermPtr operator()(const SymLit&) { return t; }
      TermPtr operator()(const UndefLit&) { return t; }
      TermPtr operator()(const Var& v) {
        auto it = sigma.find(v.name);
        return it == sigma.end() ? t : it->second;
      }
      TermPtr operator()(const Apply& a) {
        bool changed = false;
        std::vector<TermPtr> args;
        args.reserve(a.args.size());
        for (const auto& x : a.args) {
          auto nx = s.term(x, sigma);
          changed |= nx != x;
          args.push_back(std::move(nx));
        }
        if (!changed) return t;
        return std::make_shared<Term>(Term{Apply{a.fn, std::move(args)}, t->span});
      }
      TermPtr operator()(const Builtin& b) {
        bool changed = false;
        std::vector<TermPtr> args;
        args.reserve(b.args.size());
        for (const auto& x : b.args) {
          auto nx = s.term(x, sigma);
          changed |= nx != x;
          args.push_back(std::move(nx));
        }
        if (!changed) return t;
        return std::make_shared<Term>(Term{Builtin{b.op, std::move(args)}, t->span});
      }
      TermPtr operator()(const IsDef& i) {
        auto na = s.term(i.arg, sigma);
        if (na == i.arg) return t;
        return std::make_shared<Term>(Term{IsDef{std::move(na)}, t->span});
      }
      TermPtr operator()(const ChooseOne& c) {
        Binding inner = sigma;
        inner.erase(c.var);
        std::string var = c.var;
        if (!inner.empty()) {
          auto captured = image_free(inner);
          if (captured.count(var)) {
            var = s.fresh.fresh();
            inner[c.var] = t_var(var);
          }
        }
        auto ng = s.term(c.guard, inner);
        auto nr = s.term(c.result, inner);
        if (var == c.var && ng == c.guard && nr == c.result) return t;
        return std::make_shared<Term>(
            Term{ChooseOne{var, c.domain, std::move(ng), std::move(nr)}, t->span});
      }
    };
    return std::visit(V{*this, t, sigma}, t->node);
  }

  RulePtr rule(const RulePtr& r, const Binding& sigma) {
    if (!r || sigma.empty()) return r;
    struct V {
      Subst& s;
      const RulePtr& r;
      const Binding& sigma;

      // Narrows sigma for a scope binding `vars`, renaming any binder that
      // would capture a variable free in an image. Renamed binders get their
      // Var image added so one pass rewrites both.
      Binding scope_sigma(std::vector<std::string>& vars) {
        Binding inner = sigma;
        for (const auto& v : vars) inner.erase(v);
        if (!inner.empty()) {
          auto captured = image_free(inner);
          for (auto& v : vars) {
            if (captured.count(v)) {
              std::string nv = s.fresh.fresh();
              inner[v] = t_var(nv);
              v = nv;
            }
          }
        }
        return inner;
      }

      RulePtr operator()(const Update& u) {
        auto nt = s.term(u.target, sigma);
        auto nv = s.term(u.value, sigma);
        if (nt == u.target && nv == u.value) return r;
        return std::make_shared<Rule>(Rule{Update{std::move(nt), std::move(nv)}, r->span});
      }
      RulePtr operator()(const Par& p) {
        bool changed = false;
        std::vector<RulePtr> children;
        children.reserve(p.children.size());
        for (const auto& c : p.children) {
          auto nc = s.rule(c, sigma);
          changed |= nc != c;
          children.push_back(std::move(nc));
        }
        if (!changed) return r;
        return std::make_shared<Rule>(Rule{Par{std::move(children)}, r->span});
      }
      RulePtr operator()(const Cond& c) {
        auto ng = s.term(c.guard, sigma);
        auto nt = s.rule(c.then_rule, sigma);
        auto ne = s.rule(c.else_rule, sigma);
        if (ng == c.guard && nt == c.then_rule && ne == c.else_rule) return r;
        return std::make_shared<Rule>(
            Rule{Cond{std::move(ng), std::move(nt), std::move(ne)}, r->span});
      }
      RulePtr operator()(const MacroCall& m) {
        bool changed = false;
        std::vector<TermPtr> args;
        args.reserve(m.args.size());
        for (const auto& a : m.args) {
          auto na = s.term(a, sigma);
          changed |= na != a;
          args.push_back(std::move(na));
        }
        if (!changed) return r;
        return std::make_shared<Rule>(Rule{MacroCall{m.name, std::move(args)}, r->span});
      }
      RulePtr operator()(const ProgramCall& p) {
        auto na = s.term(p.agent, sigma);
        if (na == p.agent) return r;
        return std::make_shared<Rule>(Rule{ProgramCall{std::move(na)}, r->span});
      }
      RulePtr operator()(const Forall& f) {
        std::vector<std::string> vars;
        for (const auto& b : f.binders) vars.push_back(b.var);
        Binding inner = scope_sigma(vars);
        std::vector<Binder> binders = f.binders;
        bool renamed = false;
        for (size_t i = 0; i < binders.size(); ++i) {
          if (binders[i].var != vars[i]) {
            binders[i].var = vars[i];
            renamed = true;
          }
        }
        auto ng = s.term(f.guard, inner);
        auto nb = s.rule(f.body, inner);
        if (!renamed && ng == f.guard && nb == f.body) return r;
        return std::make_shared<Rule>(
            Rule{Forall{std::move(binders), std::move(ng), std::move(nb)}, r->span});
      }
      RulePtr operator()(const Choose& c) {
        std::vector<std::string> vars{c.binder.var};
        Binding inner = scope_sigma(vars);
        Binder binder = c.binder;
        bool renamed = binder.var != vars[0];
        binder.var = vars[0];
        auto ng = s.term(c.guard, inner);
        auto nb = s.rule(c.body, inner);
        auto ni = s.rule(c.ifnone, sigma); // ifnone is outside the binder scope
        if (!renamed && ng == c.guard && nb == c.body && ni == c.ifnone) return r;
        return std::make_shared<Rule>(
            Rule{Choose{std::move(binder), std::move(ng), std::move(nb), std::move(ni)}, r->span});
      }
      RulePtr operator()(const Let& l) {
        bool changed = false;
        std::vector<LetBinding> bindings;
        bindings.reserve(l.bindings.size());
        std::vector<std::string> vars;
        for (const auto& b : l.bindings) {
          auto nv = s.term(b.value, sigma); // values are evaluated outside the scope
          changed |= nv != b.value;
          bindings.push_back({b.var, std::move(nv)});
          vars.push_back(b.var);
        }
        Binding inner = scope_sigma(vars);
        for (size_t i = 0; i < bindings.size(); ++i) {
          if (bindings[i].var != vars[i]) {
            bindings[i].var = vars[i];
            changed = true;
          }
        }
        auto nb = s.rule(l.body, inner);
        changed |= nb != l.body;
        if (!changed) return r;
        return std::make_shared<Rule>(Rule{Let{std::move(bindings), std::move(nb)}, r->span});
      }
      RulePtr operator()(const Case& c) {
        bool changed = false;
        auto ns = s.term(c.scrutinee, sigma);
        changed |= ns != c.scrutinee;
        std::vector<CaseArm> arms;
        arms.reserve(c.arms.size());
        for (const auto& arm : c.arms) {
          auto nl = s.term(arm.label, sigma);
          auto nr = s.rule(arm.rule, sigma);
          changed |= nl != arm.label || nr != arm.rule;
          arms.push_back({std::move(nl), std::move(nr)});
        }
        auto no = s.rule(c.otherwise, sigma);
        changed |= no != c.otherwise;
        if (!changed) return r;
        return std::make_shared<Rule>(
            Rule{Case{std::move(ns), std::move(arms), std::move(no)}, r->span});
      }
      RulePtr operator()(const Skip&) { return r; }
    };
    return std::visit(V{*this, r, sigma}, r->node);
  }
};

void scan_flat_term(const TermPtr& t, uint64_t& best);

void scan_flat_rule(const RulePtr& r, uint64_t& best) {
  if (!r) return;
  struct V {
    uint64_t& best;
    void var(const std::string& name) { best = std::max(best, flat_index_of(name)); }
    void term(const TermPtr& t) { scan_flat_term(t, best); }
    void rule(const RulePtr& r) { scan_flat_rule(r, best); }
    void operator()(const Update& u) { term(u.target), term(u.value); }
    void operator()(const Par& p) {
      for (const auto& c : p.children) rule(c);
    }
    void operator()(const Cond& c) { term(c.guard), rule(c.then_rule), rule(c.else_rule); }
    void operator()(const MacroCall& m) {
      for (const auto& a : m.args) term(a);
    }
    void operator()(const ProgramCall& p) { term(p.agent); }
    void operator()(const Forall& f) {
      for (const auto& b : f.binders) var(b.var);
      term(f.guard), rule(f.body);
    }
    void operator()(const Choose& c) {
      var(c.binder.var), term(c.guard), rule(c.body), rule(c.ifnone);
    }
    void operator()(const Let& l) {
      for (const auto& b : l.bindings) var(b.var), term(b.value);
      rule(l.body);
    }
    void operator()(const Case& c) {
      term(c.scrutinee);
      for (const auto& arm : c.arms) term(arm.label), rule(arm.rule);
      rule(c.otherwise);
    }
    void operator()(const Skip&) {}
  };
  std::visit(V{best}, r->node);
}

void scan_flat_term(const TermPtr& t, uint64_t& best) {
  if (!t) return;
  struct V {
    uint64_t& best;
    void term(const TermPtr& t) { scan_flat_term(t, best); }
    void operator()(const BoolLit&) {}
    void operator()(const IntLit&) {}
    void operator()(const SymLit&) {}
    void operator()(const UndefLit&) {}
    void operator()(const Var& v) { best = std::max(best, flat_index_of(v.name)); }
    void operator()(const Apply& a) {
      for (const auto& x : a.args) term(x);
    }
    void operator()(const Builtin& b) {
      for (const auto& x : b.args) term(x);
    }
    void operator()(const IsDef& i) { term(i.arg); }
    void operator()(const ChooseOne& c) {
      best = std::max(best, flat_index_of(c.var));
      term(c.guard), term(c.result);
    }
  };
  std::visit(V{best}, t->node);
}

} // namespace

std::set<std::string> free_variables(const TermPtr& t) {
  std::set<std::string> bound, out;
  collect_free_term(t, bound, out);
  return out;
}

std::set<std::string> free_variables(const RulePtr& r) {
  std::set<std::string> bound, out;
  collect_free_rule(r, bound, out);
  return out;
}

uint64_t max_flat_index(const RulePtr& r) {
  uint64_t best = 0;
  scan_flat_rule(r, best);
  return best;
}

uint64_t max_flat_index(const TermPtr& t) {
  uint64_t best = 0;
  scan_flat_term(t, best);
  return best;
}

FreshNames FreshNames::seeded_from(const Model& m) {
  uint64_t best = 0;
  scan_flat_rule(m.main_rule, best);
  for (const auto& mac : m.macros) scan_flat_rule(mac.body, best);
  for (const auto& def : m.definitions) scan_flat_term(def.body, best);
  for (const auto& inv : m.invariants) scan_flat_term(inv.condition, best);
  return FreshNames(best + 1);
}

TermPtr substitute(const TermPtr& t, const Binding& binding, FreshNames& fresh) {
  Subst s{fresh};
  return s.term(t, binding);
}

RulePtr substitute(const RulePtr& r, const Binding& binding, FreshNames& fresh) {
  Subst s{fresh};
  return s.rule(r, binding);
}

RulePtr substitute(const RulePtr& r, const Binding& binding) {
  uint64_t best = max_flat_index(r);
  for (const auto& [k, v] : binding) {
    best = std::max(best, flat_index_of(k));
    best = std::max(best, max_flat_index(v));
  }
  FreshNames fresh(best + 1);
  return substitute(r, binding, fresh);
}

TermPtr substitute(const TermPtr& t, const Binding& binding) {
  uint64_t best = max_flat_index(t);
  for (const auto& [k, v] : binding) {
    best = std::max(best, flat_index_of(k));
    best = std::max(best, max_flat_index(v));
  }
  FreshNames fresh(best + 1);
  return substitute(t, binding, fresh);
}

namespace {

struct Replacer {
  const TermPtr& from;
  const TermPtr& to;
  std::set<std::string> from_free;

  bool shadowed(const std::vector<std::string>& vars) const {
    for (const auto& v : vars)
      if (from_free.count(v)) return true;
    return false;
  }

  TermPtr term(const TermPtr& t) {
    if (!t) return t;
    if (term_equal(t, from)) return to;
    struct V {
      Replacer& s;
      const TermPtr& t;
      TermPtr operator()(const BoolLit&) { return t; }
      TermPtr operator()(const IntLit&) { return t; }
      TermPtr operator()(const SymLit&) { return t; }
      TermPtr operator()(const UndefLit&) { return t; }
      TermPtr operator()(const Var&) { return t; }
      TermPtr operator()(const Apply& a) {
        bool changed = false;
        std::vector<TermPtr> args;
        for (const auto& x : a.args) {
          auto nx = s.term(x);
          changed |= nx != x;
          args.push_back(std::move(nx));
        }
        if (!changed) return t;
        return std::make_shared<Term>(Term{Apply{a.fn, std::move(args)}, t->span});
      }
      TermPtr operator()(const Builtin& b) {
        bool changed = false;
        std::vector<TermPtr> args;
        for (const auto& x : b.args) {
          auto nx = s.term(x);
          changed |= nx != x;
          args.push_back(std::move(nx));
        }
        if (!changed) return t;
        return std::make_shared<Term>(Term{Builtin{b.op, std::move(args)}, t->span});
      }
      TermPtr operator()(const IsDef& i) {
        auto na = s.term(i.arg);
        if (na == i.arg) return t;
        return std::make_shared<Term>(Term{IsDef{std::move(na)}, t->span});
      }
      TermPtr operator()(const ChooseOne& c) {
        if (s.shadowed({c.var})) return t;
        auto ng = s.term(c.guard);
        auto nr = s.term(c.result);
        if (ng == c.guard && nr == c.result) return t;
        return std::make_shared<Term>(
            Term{ChooseOne{c.var, c.domain, std::move(ng), std::move(nr)}, t->span});
      }
    };
    return std::visit(V{*this, t}, t->node);
  }

  RulePtr rule(const RulePtr& r) {
    if (!r) return r;
    struct V {
      Replacer& s;
      const RulePtr& r;
      RulePtr operator()(const Update& u) {
        // the target names a location: its head application is not a value
        // position, only the arguments are
        TermPtr nt = u.target;
        if (const auto* a = std::get_if<Apply>(&u.target->node)) {
          bool changed = false;
          std::vector<TermPtr> args;
          for (const auto& x : a->args) {
            auto nx = s.term(x);
            changed |= nx != x;
            args.push_back(std::move(nx));
          }
          if (changed)
            nt = std::make_shared<Term>(Term{Apply{a->fn, std::move(args)}, u.target->span});
        }
        auto nv = s.term(u.value);
        if (nt == u.target && nv == u.value) return r;
        return std::make_shared<Rule>(Rule{Update{std::move(nt), std::move(nv)}, r->span});
      }
      RulePtr operator()(const Par& p) {
        bool changed = false;
        std::vector<RulePtr> children;
        for (const auto& c : p.children) {
          auto nc = s.rule(c);
          changed |= nc != c;
          children.push_back(std::move(nc));
        }
        if (!changed) return r;
        return std::make_shared<Rule>(Rule{Par{std::move(children)}, r->span});
      }
      RulePtr operator()(const Cond& c) {
        auto ng = s.term(c.guard);
        auto nt = s.rule(c.then_rule);
        auto ne = s.rule(c.else_rule);
        if (ng == c.guard && nt == c.then_rule && ne == c.else_rule) return r;
        return std::make_shared<Rule>(
            Rule{Cond{std::move(ng), std::move(nt), std::move(ne)}, r->span});
      }
      RulePtr operator()(const MacroCall& m) {
        bool changed = false;
        std::vector<TermPtr> args;
        for (const auto& a : m.args) {
          auto na = s.term(a);
          changed |= na != a;
          args.push_back(std::move(na));
        }
        if (!changed) return r;
        return std::make_shared<Rule>(Rule{MacroCall{m.name, std::move(args)}, r->span});
      }
      RulePtr operator()(const ProgramCall& p) {
        auto na = s.term(p.agent);
        if (na == p.agent) return r;
        return std::make_shared<Rule>(Rule{ProgramCall{std::move(na)}, r->span});
      }
      RulePtr operator()(const Forall& f) {
        std::vector<std::string> vars;
        for (const auto& b : f.binders) vars.push_back(b.var);
        if (s.shadowed(vars)) return r;
        auto ng = s.term(f.guard);
        auto nb = s.rule(f.body);
        if (ng == f.guard && nb == f.body) return r;
        return std::make_shared<Rule>(Rule{Forall{f.binders, std::move(ng), std::move(nb)}, r->span});
      }
      RulePtr operator()(const Choose& c) {
        RulePtr ni = s.rule(c.ifnone);
        TermPtr ng = c.guard;
        RulePtr nb = c.body;
        if (!s.shadowed({c.binder.var})) {
          ng = s.term(c.guard);
          nb = s.rule(c.body);
        }
        if (ng == c.guard && nb == c.body && ni == c.ifnone) return r;
        return std::make_shared<Rule>(
            Rule{Choose{c.binder, std::move(ng), std::move(nb), std::move(ni)}, r->span});
      }
      RulePtr operator()(const Let& l) {
        bool changed = false;
        std::vector<LetBinding> bindings;
        std::vector<std::string> vars;
        for (const auto& b : l.bindings) {
          auto nv = s.term(b.value);
          changed |= nv != b.value;
          bindings.push_back({b.var, std::move(nv)});
          vars.push_back(b.var);
        }
        RulePtr nb = l.body;
        if (!s.shadowed(vars)) {
          nb = s.rule(l.body);
          changed |= nb != l.body;
        }
        if (!changed) return r;
        return std::make_shared<Rule>(Rule{Let{std::move(bindings), std::move(nb)}, r->span});
      }
      RulePtr operator()(const Case& c) {
        bool changed = false;
        auto ns = s.term(c.scrutinee);
        changed |= ns != c.scrutinee;
        std::vector<CaseArm> arms;
        for (const auto& arm : c.arms) {
          auto nl = s.term(arm.label);
          auto nr = s.rule(arm.rule);
          changed |= nl != arm.label || nr != arm.rule;
          arms.push_back({std::move(nl), std::move(nr)});
        }
        auto no = s.rule(c.otherwise);
        changed |= no != c.otherwise;
        if (!changed) return r;
        return std::make_shared<Rule>(
            Rule{Case{std::move(ns), std::move(arms), std::move(no)}, r->span});
      }
      RulePtr operator()(const Skip&) { return r; }
    };
    return std::visit(V{*this, r}, r->node);
  }
};

} // namespace

RulePtr replace_term(const RulePtr& r, const TermPtr& from, const TermPtr& to) {
  Replacer rep{from, to, free_variables(from)};
  return rep.rule(r);
}

TermPtr replace_term(const TermPtr& t, const TermPtr& from, const TermPtr& to) {
  Replacer rep{from, to, free_variables(from)};
  return rep.term(t);
}

} // namespace asmf
