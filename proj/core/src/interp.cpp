#include "asmf/interp.hpp"

#include <sstream>

#include "asmf/subst.hpp"

namespace asmf {

const char* step_status_name(StepStatus s) {
  switch (s) {
    case StepStatus::Completed: return "completed";
    case StepStatus::InconsistentUpdate: return "inconsistent-update";
    case StepStatus::InvariantViolation: return "invariant-violation";
    case StepStatus::UndefinedGuard: return "undefined-guard";
    case StepStatus::OutOfDomain: return "out-of-domain";
  }
  return "?";
}

namespace {

using Env = std::map<std::string, Value>;

int64_t checked_i64(__int128 v) {
  if (v > static_cast<__int128>(INT64_MAX) || v < static_cast<__int128>(INT64_MIN))
    throw EvalFault{StepStatus::OutOfDomain, "arithmetic overflow"};
  return static_cast<int64_t>(v);
}

} // namespace

// Term and rule evaluation against an executor's state. Undef propagates
// through terms (with the usual three-valued and/or/implies); faults are
// thrown. Guards, location arguments and dispatch arguments must be defined.
struct Eval {
  Executor& ex;
  const MonitoredInputs& inputs;

  const TypedModel& tm() const { return ex.tm_; }

  size_t choose_index(size_t n) {
    // exactly one draw per choice point, taken iff there is a candidate
    if (ex.opts_.policy == ChoicePolicy::FirstInOrder) return 0;
    return static_cast<size_t>(ex.engine_() % n);
  }

  Value apply_value(const std::string& fn, const std::vector<Value>& args) {
    const FunctionDecl* decl = tm().decl(fn);
    if (!decl) throw EvalFault{StepStatus::UndefinedGuard, "unknown function '" + fn + "'"};
    for (const auto& a : args)
      if (a.is_undef()) return Value::undef();
    std::vector<Domain> params = tm().param_domains(*decl);
    for (size_t i = 0; i < args.size(); ++i) {
      if (!params[i].contains(args[i]))
        throw EvalFault{StepStatus::OutOfDomain, "argument " + std::to_string(i + 1) + " of '" +
                                                     fn + "' is " + args[i].str() +
                                                     ", outside " + params[i].str()};
    }
    switch (decl->kind) {
      case FunctionKind::Controlled: {
        auto it = ex.controlled_.find({fn, args});
        return it == ex.controlled_.end() ? Value::undef() : it->second;
      }
      case FunctionKind::Monitored: {
        auto it = inputs.find({fn, args});
        if (it == inputs.end()) {
          ex.monitored_misses_.insert({fn, args});
          return Value::undef();
        }
        if (!it->second.is_undef() && !tm().result_domain(*decl).contains(it->second))
          throw EvalFault{StepStatus::OutOfDomain,
                          "input " + Location{fn, args}.str() + " = " + it->second.str() +
                              ", outside " + tm().result_domain(*decl).str()};
        return it->second;
      }
      case FunctionKind::Static: {
        const FunctionDef* def = tm().def(fn);
        if (def->is_table) {
          for (const auto& entry : def->entries)
            if (entry.args == args) return entry.value;
          return Value::undef();
        }
        auto key = std::make_pair(fn, args);
        auto it = ex.static_memo_.find(key);
        if (it != ex.static_memo_.end()) return it->second;
        Env env;
        for (size_t i = 0; i < def->formals.size(); ++i) env[def->formals[i].var] = args[i];
        Value v = term(def->body, env);
        ex.static_memo_.emplace(std::move(key), v);
        return v;
      }
      case FunctionKind::Derived: {
        auto key = std::make_pair(fn, args);
        auto it = ex.derived_memo_.find(key);
        if (it != ex.derived_memo_.end()) return it->second;
        const FunctionDef* def = tm().def(fn);
        Env env;
        for (size_t i = 0; i < def->formals.size(); ++i) env[def->formals[i].var] = args[i];
        Value v = term(def->body, env);
        ex.derived_memo_.emplace(std::move(key), v);
        return v;
      }
    }
    return Value::undef();
  }

  Value term(const TermPtr& t, const Env& env) {
    struct V {
      Eval& s;
      const Env& env;
      const TermPtr& t;

      Value operator()(const BoolLit& b) { return Value::boolean(b.value); }
      Value operator()(const IntLit& n) { return Value::integer(n.value); }
      Value operator()(const SymLit& sym) { return Value::symbol(sym.value); }
      Value operator()(const UndefLit&) { return Value::undef(); }
      Value operator()(const Var& v) {
        auto it = env.find(v.name);
        if (it == env.end())
          throw EvalFault{StepStatus::UndefinedGuard, "unbound variable '" + v.name + "'"};
        return it->second;
      }
      Value operator()(const Apply& a) {
        std::vector<Value> args;
        args.reserve(a.args.size());
        for (const auto& x : a.args) args.push_back(s.term(x, env));
        return s.apply_value(a.fn, args);
      }
      Value operator()(const Builtin& b) {
        switch (b.op) {
          case BuiltinOp::And: {
            Value l = s.term(b.args[0], env);
            if (!l.is_undef() && !l.as_bool()) return Value::boolean(false);
            Value r = s.term(b.args[1], env);
            if (!r.is_undef() && !r.as_bool()) return Value::boolean(false);
            if (l.is_undef() || r.is_undef()) return Value::undef();
            return Value::boolean(true);
          }
          case BuiltinOp::Or: {
            Value l = s.term(b.args[0], env);
            if (!l.is_undef() && l.as_bool()) return Value::boolean(true);
            Value r = s.term(b.args[1], env);
            if (!r.is_undef() && r.as_bool()) return Value::boolean(true);
            if (l.is_undef() || r.is_undef()) return Value::undef();
            return Value::boolean(false);
          }
          case BuiltinOp::Implies: {
            Value l = s.term(b.args[0], env);
            if (!l.is_undef() && !l.as_bool()) return Value::boolean(true);
            Value r = s.term(b.args[1], env);
            if (!r.is_undef() && r.as_bool()) return Value::boolean(true);
            if (l.is_undef() || r.is_undef()) return Value::undef();
            return Value::boolean(false);
          }
          case BuiltinOp::Not: {
            Value a = s.term(b.args[0], env);
            if (a.is_undef()) return Value::undef();
            return Value::boolean(!a.as_bool());
          }
          case BuiltinOp::Eq:
          case BuiltinOp::Ne: {
            Value l = s.term(b.args[0], env);
            Value r = s.term(b.args[1], env);
            bool eq = l == r;
            return Value::boolean(b.op == BuiltinOp::Eq ? eq : !eq);
          }
          case BuiltinOp::Lt:
          case BuiltinOp::Le:
          case BuiltinOp::Gt:
          case BuiltinOp::Ge: {
            Value l = s.term(b.args[0], env);
            Value r = s.term(b.args[1], env);
            if (l.is_undef() || r.is_undef()) return Value::undef();
            int64_t a = l.as_int(), c = r.as_int();
            switch (b.op) {
              case BuiltinOp::Lt: return Value::boolean(a < c);
              case BuiltinOp::Le: return Value::boolean(a <= c);
              case BuiltinOp::Gt: return Value::boolean(a > c);
              default: return Value::boolean(a >= c);
            }
          }
          case BuiltinOp::Add:
          case BuiltinOp::Sub:
          case BuiltinOp::Mul: {
            Value l = s.term(b.args[0], env);
            Value r = s.term(b.args[1], env);
            if (l.is_undef() || r.is_undef()) return Value::undef();
            __int128 a = l.as_int(), c = r.as_int();
            __int128 v = b.op == BuiltinOp::Add ? a + c : b.op == BuiltinOp::Sub ? a - c : a * c;
            return Value::integer(checked_i64(v));
          }
        }
        return Value::undef();
      }
      Value operator()(const IsDef& i) {
        return Value::boolean(!s.term(i.arg, env).is_undef());
      }
      Value operator()(const ChooseOne& c) {
        Domain dom = s.tm().resolve(c.domain);
        std::vector<Value> candidates;
        for (const auto& v : enumerate_domain(dom)) {
          Env inner = env;
          inner[c.var] = v;
          Value g = s.term(c.guard, inner);
          if (g.is_undef())
            throw EvalFault{StepStatus::UndefinedGuard, "selection guard is undefined"};
          if (g.as_bool()) candidates.push_back(v);
        }
        if (candidates.empty()) return Value::undef();
        Env inner = env;
        inner[c.var] = candidates[s.choose_index(candidates.size())];
        return s.term(c.result, inner);
      }
    };
    return std::visit(V{*this, env, t}, t->node);
  }

  Value defined_term(const TermPtr& t, const Env& env, const char* what) {
    Value v = term(t, env);
    if (v.is_undef())
      throw EvalFault{StepStatus::UndefinedGuard, std::string(what) + " is undefined"};
    return v;
  }

  void insert_update(std::map<Location, Value>& us, Location loc, const Value& v) {
    auto [it, fresh] = us.emplace(std::move(loc), v);
    if (!fresh && !(it->second == v))
      throw EvalFault{StepStatus::InconsistentUpdate,
                      "conflicting updates to " + it->first.str() + ": " + it->second.str() +
                          " vs " + v.str()};
  }

  void rule(const RulePtr& r, const Env& env, std::map<Location, Value>& us) {
    if (!r) return;
    struct V {
      Eval& s;
      const Env& env;
      std::map<Location, Value>& us;
      const RulePtr& r;

      void operator()(const Update& u) {
        const Apply& target = std::get<Apply>(u.target->node);
        const FunctionDecl* decl = s.tm().decl(target.fn);
        std::vector<Value> args;
        args.reserve(target.args.size());
        for (const auto& x : target.args) {
          Value a = s.term(x, env);
          if (a.is_undef())
            throw EvalFault{StepStatus::UndefinedGuard,
                            "location argument of '" + target.fn + "' is undefined"};
          args.push_back(std::move(a));
        }
        std::vector<Domain> params = s.tm().param_domains(*decl);
        for (size_t i = 0; i < args.size(); ++i) {
          if (!params[i].contains(args[i]))
            throw EvalFault{StepStatus::OutOfDomain,
                            "location argument " + std::to_string(i + 1) + " of '" + target.fn +
                                "' is " + args[i].str() + ", outside " + params[i].str()};
        }
        Value v = s.term(u.value, env);
        if (!v.is_undef() && !s.tm().result_domain(*decl).contains(v))
          throw EvalFault{StepStatus::OutOfDomain,
                          "value " + v.str() + " for " + Location{target.fn, args}.str() +
                              " is outside " + s.tm().result_domain(*decl).str()};
        s.insert_update(us, {target.fn, std::move(args)}, v);
      }
      void operator()(const Par& p) {
        for (const auto& c : p.children) s.rule(c, env, us);
      }
      void operator()(const Cond& c) {
        Value g = s.defined_term(c.guard, env, "guard");
        if (g.as_bool()) s.rule(c.then_rule, env, us);
        else s.rule(c.else_rule, env, us);
      }
      void operator()(const MacroCall& mc) {
        // call-by-name: argument terms are substituted into the body and
        // evaluated at their use sites in the caller's environment
        const MacroDecl* mac = s.tm().macro(mc.name);
        Binding sigma;
        for (size_t i = 0; i < mac->formals.size(); ++i) sigma[mac->formals[i].var] = mc.args[i];
        RulePtr body = substitute(mac->body, sigma);
        s.rule(body, env, us);
      }
      void operator()(const ProgramCall& pc) {
        Value a = s.defined_term(pc.agent, env, "dispatch argument");
        const std::string& set = s.tm().agent_domain->name;
        const MacroDecl* mac = s.tm().macro(s.tm().agent_program.at(set));
        Env inner;
        inner["self"] = a;
        s.rule(mac->body, inner, us);
      }
      void operator()(const Forall& f) {
        std::vector<Domain> doms;
        doms.reserve(f.binders.size());
        for (const auto& b : f.binders) doms.push_back(s.tm().resolve(b.domain));
        for (const auto& tuple : domain_product(doms)) {
          Env inner = env;
          for (size_t i = 0; i < f.binders.size(); ++i) inner[f.binders[i].var] = tuple[i];
          Value g = s.defined_term(f.guard, inner, "guard");
          if (g.as_bool()) s.rule(f.body, inner, us);
        }
      }
      void operator()(const Choose& c) {
        Domain dom = s.tm().resolve(c.binder.domain);
        std::vector<Value> candidates;
        for (const auto& v : enumerate_domain(dom)) {
          Env inner = env;
          inner[c.binder.var] = v;
          Value g = s.defined_term(c.guard, inner, "guard");
          if (g.as_bool()) candidates.push_back(v);
        }
        if (candidates.empty()) {
          s.rule(c.ifnone, env, us);
          return;
        }
        Env inner = env;
        inner[c.binder.var] = candidates[s.choose_index(candidates.size())];
        s.rule(c.body, inner, us);
      }
      void operator()(const Let& l) {
        Env inner = env;
        for (const auto& b : l.bindings) inner[b.var] = s.term(b.value, env);
        s.rule(l.body, inner, us);
      }
      void operator()(const Case& c) {
        Value scrutinee = s.term(c.scrutinee, env);
        bool any = false;
        for (const auto& arm : c.arms) {
          Value label = s.term(arm.label, env);
          if (scrutinee == label) {
            any = true;
            s.rule(arm.rule, env, us);
          }
        }
        if (!any) s.rule(c.otherwise, env, us);
      }
      void operator()(const Skip&) {}
    };
    std::visit(V{*this, env, us, r}, r->node);
  }

  // Returns the name of the first failing invariant; throws UndefinedGuard
  // when one evaluates to undef.
  std::optional<std::string> invariants() {
    for (const auto& inv : tm().model.invariants) {
      Value v = term(inv.condition, {});
      if (v.is_undef())
        throw EvalFault{StepStatus::UndefinedGuard,
                        "invariant '" + inv.name + "' is undefined"};
      if (!v.as_bool()) return inv.name;
    }
    return std::nullopt;
  }
};

Executor::Executor(const TypedModel& tm, const ExecOptions& opts) : tm_(tm), opts_(opts) {
  controlled_ = initial_state(tm);
  engine_.seed(opts.seed);
}

StepResult Executor::step(const MonitoredInputs& inputs) {
  derived_memo_.clear();
  monitored_misses_.clear();
  StepResult out;
  std::map<Location, Value> us;
  try {
    Eval ev{*this, inputs};
    ev.rule(tm_.model.main_rule, {}, us);
  } catch (const EvalFault& f) {
    out.status = f.status;
    out.message = f.message;
    return out;
  }
  for (const auto& [loc, v] : us) controlled_[loc] = v;
  out.updates = std::move(us);
  try {
    Eval ev{*this, inputs};
    derived_memo_.clear(); // new state: derived values change
    if (auto viol = ev.invariants()) {
      out.status = StepStatus::InvariantViolation;
      out.message = "invariant '" + *viol + "' violated";
    }
  } catch (const EvalFault& f) {
    out.status = f.status;
    out.message = f.message;
  }
  return out;
}

std::optional<std::string> Executor::violated_invariant(const MonitoredInputs& inputs) {
  derived_memo_.clear();
  Eval ev{*this, inputs};
  return ev.invariants();
}

Value Executor::eval_term_in_state(const TermPtr& t, const MonitoredInputs& inputs) {
  Eval ev{*this, inputs};
  return ev.term(t, {});
}

std::map<Location, Value> initial_state(const TypedModel& tm) {
  std::map<Location, Value> out;
  for (const auto& entry : tm.model.init) out[{entry.fn, entry.args}] = entry.value;
  return out;
}

std::string Trace::serialize() const {
  std::ostringstream os;
  for (size_t i = 0; i < states.size(); ++i) {
    os << "state " << i << ":\n";
    for (const auto& [loc, v] : states[i]) os << "  " << loc.str() << " = " << v.str() << "\n";
    if (i < inputs.size() && !inputs[i].empty()) {
      os << "inputs " << i << ":\n";
      for (const auto& [loc, v] : inputs[i]) os << "  " << loc.str() << " = " << v.str() << "\n";
    }
  }
  os << "status: " << step_status_name(final_status) << "\n";
  if (!message.empty()) os << "message: " << message << "\n";
  return os.str();
}

Trace run(const TypedModel& tm, const std::vector<MonitoredInputs>& inputs,
          const ExecOptions& opts) {
  Trace tr;
  Executor ex(tm, opts);
  tr.states.push_back(ex.state());
  try {
    MonitoredInputs first = inputs.empty() ? MonitoredInputs{} : inputs.front();
    if (auto viol = ex.violated_invariant(first)) {
      tr.final_status = StepStatus::InvariantViolation;
      tr.message = "invariant '" + *viol + "' violated in the initial state";
      return tr;
    }
  } catch (const EvalFault& f) {
    tr.final_status = f.status;
    tr.message = f.message;
    return tr;
  }
  for (const auto& step_inputs : inputs) {
    StepResult sr = ex.step(step_inputs);
    tr.inputs.push_back(step_inputs);
    if (sr.status == StepStatus::Completed) {
      tr.states.push_back(ex.state());
      continue;
    }
    // the post-state exists for problems detected after the updates applied
    if (sr.status == StepStatus::InvariantViolation || !sr.updates.empty())
      tr.states.push_back(ex.state());
    tr.final_status = sr.status;
    tr.message = sr.message;
    return tr;
  }
  return tr;
}

std::optional<Value> static_eval(const TypedModel& tm, const std::string& fn,
                                 const std::vector<Value>& args) {
  const FunctionDecl* decl = tm.decl(fn);
  if (!decl || decl->kind != FunctionKind::Static) return std::nullopt;
  try {
    Executor ex(tm, {});
    MonitoredInputs none;
    Eval ev{ex, none};
    return ev.apply_value(fn, args);
  } catch (const EvalFault&) {
    return std::nullopt;
  }
}

} // namespace asmf
