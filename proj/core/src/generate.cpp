#include "asmf/generate.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "asmf/domain.hpp"

namespace asmf {

std::map<std::string, int> GenConfig::default_weights() {
  return {{"update", 6}, {"par", 4},  {"cond", 4},       {"forall", 2}, {"choose", 2},
          {"let", 2},    {"case", 2}, {"macro_call", 2}, {"skip", 1}};
}

namespace {

struct Gen {
  GenConfig cfg;
  std::mt19937_64 eng;
  Model m;

  struct GDom {
    DomainRef ref;
    Domain dom;
  };
  std::vector<GDom> doms;        // Boolean + generated named domains
  std::vector<FunctionDecl> fns; // mirror of m.functions
  int var_counter = 0;

  explicit Gen(const GenConfig& c) : cfg(c), eng(c.seed) {
    cfg.max_depth = std::max(1, cfg.max_depth);
    cfg.max_domains = std::max(1, cfg.max_domains);
    cfg.max_functions = std::max(1, cfg.max_functions);
    cfg.max_macros = std::max(1, cfg.max_macros);
    cfg.max_domain_card = std::max<int64_t>(1, cfg.max_domain_card);
    cfg.max_int = std::max<int64_t>(1, cfg.max_int);
  }

  uint64_t draw(uint64_t n) { return n <= 1 ? 0 : eng() % n; }
  bool chance(int percent) { return draw(100) < static_cast<uint64_t>(percent); }
  int64_t irange(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(draw(static_cast<uint64_t>(hi - lo + 1)));
  }

  // --- signature ---------------------------------------------------------

  void gen_domains() {
    doms.push_back({DomainRef::boolean(), Domain::boolean()});
    int n = static_cast<int>(irange(1, cfg.max_domains));
    for (int k = 0; k < n; ++k) {
      if (chance(50)) {
        std::string name = "E" + std::to_string(k);
        std::vector<std::string> elems;
        int64_t card = irange(1, cfg.max_domain_card);
        for (int64_t j = 0; j < card; ++j)
          elems.push_back(name + std::string(1, static_cast<char>('A' + j % 26)) +
                          (j >= 26 ? std::to_string(j / 26) : ""));
        Domain d = Domain::enumeration(name, std::move(elems));
        m.domains.push_back(d);
        doms.push_back({DomainRef::named(name), std::move(d)});
      } else {
        std::string name = "R" + std::to_string(k);
        int64_t width = irange(0, cfg.max_domain_card - 1);
        int64_t lo = irange(-cfg.max_int, cfg.max_int - width);
        Domain d = Domain::int_range(lo, lo + width, name);
        m.domains.push_back(d);
        doms.push_back({DomainRef::named(name), std::move(d)});
      }
    }
  }

  const GDom& pick_dom() { return doms[draw(doms.size())]; }

  void gen_functions() {
    int n = static_cast<int>(irange(1, cfg.max_functions));
    for (int i = 0; i < n; ++i) {
      FunctionDecl d;
      d.name = "f" + std::to_string(i);
      if (i == 0) {
        d.kind = FunctionKind::Controlled; // something to update
      } else {
        uint64_t r = draw(100);
        d.kind = r < 40   ? FunctionKind::Controlled
                 : r < 65 ? FunctionKind::Monitored
                 : r < 85 ? FunctionKind::Static
                          : FunctionKind::Derived;
      }
      int arity = static_cast<int>(draw(3)); // 0..2
      for (int a = 0; a < arity; ++a) d.params.push_back(pick_dom().ref);
      d.result = pick_dom().ref;
      m.functions.push_back(d);
      fns.push_back(std::move(d));
    }
  }

  const Domain& dom_of(const DomainRef& ref) {
    for (const auto& g : doms)
      if (g.ref == ref) return g.dom;
    return doms.front().dom; // unreachable: every ref comes from doms
  }

  Value value_in(const Domain& d) {
    std::vector<Value> vs = enumerate_domain(d);
    return vs[draw(vs.size())];
  }

  void gen_definitions() {
    for (size_t di = 0; di < fns.size(); ++di) {
      const FunctionDecl& d = fns[di];
      if (d.kind != FunctionKind::Static && d.kind != FunctionKind::Derived) continue;
      FunctionDef def;
      def.name = d.name;
      std::vector<Domain> params;
      for (const auto& p : d.params) params.push_back(dom_of(p));
      const Domain& result = dom_of(d.result);

      if (d.kind == FunctionKind::Static && chance(50)) {
        // table form, one entry per argument tuple
        def.is_table = true;
        for (const auto& args : domain_product(params))
          def.entries.push_back({args, value_in(result)});
        m.definitions.push_back(std::move(def));
        continue;
      }

      for (size_t i = 0; i < d.params.size(); ++i)
        def.formals.push_back({"$p" + std::to_string(i), d.params[i]});

      // identity-shaped bodies keep the declared result domain containment
      // trivially satisfiable: a literal of the result domain, a formal or a
      // 0-ary application declared with the identical result, or (derived
      // only) a selection over the result domain
      std::vector<TermPtr> options;
      options.push_back(t_value(value_in(result)));
      for (const auto& f : def.formals)
        if (f.domain == d.result) options.push_back(t_var(f.var));
      for (size_t oi = 0; oi < fns.size(); ++oi) {
        const FunctionDecl& other = fns[oi];
        if (other.name == d.name || !other.params.empty() || !(other.result == d.result)) continue;
        if (other.kind == FunctionKind::Derived) continue; // no def-def cycles
        // a static body may only read statics defined earlier, keeping the
        // definition graph acyclic
        if (d.kind == FunctionKind::Static && (other.kind != FunctionKind::Static || oi >= di))
          continue;
        options.push_back(t_apply(other.name));
      }
      if (d.kind == FunctionKind::Derived && chance(25)) {
        // a selection guard must keep at least one candidate, so the derived
        // value stays defined
        TermPtr guard = (result.cardinality() < 2 || chance(50))
                            ? t_bool(true)
                            : t_op(BuiltinOp::Ne, t_var("$c"), t_value(value_in(result)));
        def.body = t_chooseone("$c", d.result, std::move(guard), t_var("$c"));
      } else {
        def.body = options[draw(options.size())];
      }
      m.definitions.push_back(std::move(def));
    }
  }

  void gen_init() {
    for (const auto& d : fns) {
      if (d.kind != FunctionKind::Controlled) continue;
      std::vector<Domain> params;
      for (const auto& p : d.params) params.push_back(dom_of(p));
      const Domain& result = dom_of(d.result);
      for (const auto& args : domain_product(params))
        m.init.push_back({d.name, args, value_in(result), {}});
    }
  }

  // --- terms -------------------------------------------------------------

  using Scope = std::vector<std::pair<std::string, Domain>>;

  TermPtr gen_term(const Domain& want, const Scope& scope, int depth) {
    // leaves: literals, in-scope variables, function reads
    if (depth <= 0 || chance(40)) {
      std::vector<TermPtr> options;
      options.push_back(t_value(value_in(want)));
      for (const auto& [v, d] : scope)
        if (d.same_carrier(want)) options.push_back(t_var(v));
      for (const auto& f : fns)
        if (dom_of(f.result).same_carrier(want) && f.params.size() <= 2) {
          std::vector<TermPtr> args;
          for (const auto& p : f.params) args.push_back(t_value(value_in(dom_of(p))));
          options.push_back(t_apply(f.name, std::move(args)));
        }
      return options[draw(options.size())];
    }
    if (want.kind == Domain::Kind::IntRange && chance(30)) {
      BuiltinOp op = chance(50) ? BuiltinOp::Add : (chance(50) ? BuiltinOp::Sub : BuiltinOp::Mul);
      return t_op(op, gen_term(want, scope, depth - 1), gen_term(want, scope, depth - 1));
    }
    if (want.kind == Domain::Kind::Boolean) return gen_bool(scope, depth);
    // a function read with generated arguments of the right carriers
    std::vector<const FunctionDecl*> reads;
    for (const auto& f : fns)
      if (dom_of(f.result).same_carrier(want) && f.params.size() <= 2) reads.push_back(&f);
    if (!reads.empty()) {
      const FunctionDecl* f = reads[draw(reads.size())];
      std::vector<TermPtr> args;
      for (const auto& p : f->params) args.push_back(gen_term(dom_of(p), scope, depth - 1));
      return t_apply(f->name, std::move(args));
    }
    return t_value(value_in(want));
  }

  TermPtr gen_bool(const Scope& scope, int depth) {
    if (depth <= 0) return gen_term(Domain::boolean(), scope, 0);
    switch (draw(6)) {
      case 0: { // comparison over a shared carrier
        const Domain& d = pick_dom().dom;
        BuiltinOp op = chance(60) ? (chance(50) ? BuiltinOp::Eq : BuiltinOp::Ne)
                       : d.kind == Domain::Kind::IntRange
                           ? (chance(50) ? BuiltinOp::Lt : BuiltinOp::Le)
                           : BuiltinOp::Eq;
        return t_op(op, gen_term(d, scope, depth - 1), gen_term(d, scope, depth - 1));
      }
      case 1:
        return t_op(chance(50) ? BuiltinOp::And : BuiltinOp::Or, gen_bool(scope, depth - 1),
                    gen_bool(scope, depth - 1));
      case 2:
        return t_not(gen_bool(scope, depth - 1));
      case 3:
        return t_op(BuiltinOp::Implies, gen_bool(scope, depth - 1), gen_bool(scope, depth - 1));
      case 4:
        return t_isdef(gen_term(pick_dom().dom, scope, depth - 1));
      default:
        return gen_term(Domain::boolean(), scope, depth - 1);
    }
  }

  // --- rules -------------------------------------------------------------

  std::vector<const FunctionDecl*> controlled() {
    std::vector<const FunctionDecl*> out;
    for (const auto& f : fns)
      if (f.kind == FunctionKind::Controlled) out.push_back(&f);
    return out;
  }

  std::string fresh_var() { return "$v" + std::to_string(++var_counter); }

  RulePtr gen_update(const Scope& scope) {
    auto ctl = controlled();
    const FunctionDecl* f = ctl[draw(ctl.size())];
    std::vector<TermPtr> args;
    // mostly literal arguments: in-domain by construction, so the update
    // itself cannot fault on argument lookup
    for (const auto& p : f->params)
      args.push_back(chance(70) ? t_value(value_in(dom_of(p))) : gen_term(dom_of(p), scope, 1));
    TermPtr value = gen_term(dom_of(f->result), scope, 2);
    return r_update(t_apply(f->name, std::move(args)), std::move(value));
  }

  // domains small enough to expand without blowing up under quantification
  const GDom& pick_binder_dom() {
    std::vector<const GDom*> small;
    for (const auto& g : doms)
      if (g.dom.cardinality() <= cfg.max_domain_card) small.push_back(&g);
    if (small.empty()) return doms.front();
    return *small[draw(small.size())];
  }

  RulePtr gen_rule(int depth, const Scope& scope, size_t callable_macros) {
    if (depth >= cfg.max_depth) return chance(80) ? gen_update(scope) : r_skip();

    // weighted constructor pick
    std::vector<std::pair<std::string, int>> ws(cfg.weights.begin(), cfg.weights.end());
    int64_t total = 0;
    for (const auto& [k, w] : ws) total += std::max(0, w);
    if (total == 0) return gen_update(scope);
    int64_t roll = irange(0, total - 1);
    std::string kind = "update";
    for (const auto& [k, w] : ws) {
      if (w <= 0) continue;
      if (roll < w) {
        kind = k;
        break;
      }
      roll -= w;
    }

    if (kind == "macro_call" && callable_macros == 0) kind = "update";
    if (kind == "update") return gen_update(scope);
    if (kind == "skip") return r_skip();
    if (kind == "par") {
      std::vector<RulePtr> children;
      int n = static_cast<int>(irange(2, 3));
      for (int i = 0; i < n; ++i) children.push_back(gen_rule(depth + 1, scope, callable_macros));
      return r_par(std::move(children));
    }
    if (kind == "cond") {
      TermPtr guard = gen_bool(scope, 2);
      RulePtr then_rule = gen_rule(depth + 1, scope, callable_macros);
      RulePtr else_rule = chance(50) ? gen_rule(depth + 1, scope, callable_macros) : nullptr;
      return r_cond(std::move(guard), std::move(then_rule), std::move(else_rule));
    }
    if (kind == "forall") {
      int n = chance(20) ? 2 : 1;
      std::vector<Binder> binders;
      Scope inner = scope;
      for (int i = 0; i < n; ++i) {
        const GDom& g = pick_binder_dom();
        std::string v = fresh_var();
        binders.push_back({v, g.ref});
        inner.emplace_back(v, g.dom);
      }
      TermPtr guard = gen_bool(inner, 1);
      return r_forall(std::move(binders), std::move(guard),
                      gen_rule(depth + 1, inner, callable_macros));
    }
    if (kind == "choose") {
      const GDom& g = pick_binder_dom();
      std::string v = fresh_var();
      Scope inner = scope;
      inner.emplace_back(v, g.dom);
      TermPtr guard = gen_bool(inner, 1);
      RulePtr body = gen_rule(depth + 1, inner, callable_macros);
      RulePtr ifnone = chance(40) ? gen_rule(depth + 1, scope, callable_macros) : nullptr;
      return r_choose({v, g.ref}, std::move(guard), std::move(body), std::move(ifnone));
    }
    if (kind == "let") {
      const GDom& g = pick_dom();
      std::string v = fresh_var();
      TermPtr value = gen_term(g.dom, scope, 2);
      Scope inner = scope;
      inner.emplace_back(v, g.dom);
      return r_let({{v, std::move(value)}}, gen_rule(depth + 1, inner, callable_macros));
    }
    if (kind == "case") {
      const GDom& g = pick_dom();
      TermPtr scrutinee = gen_term(g.dom, scope, 2);
      std::vector<Value> labels = enumerate_domain(g.dom);
      std::vector<CaseArm> arms;
      int n = static_cast<int>(irange(1, std::min<int64_t>(3, labels.size())));
      for (int i = 0; i < n; ++i) {
        TermPtr label = (i == 0 && chance(15)) ? t_undef() : t_value(labels[i]);
        arms.push_back({std::move(label), gen_rule(depth + 1, scope, callable_macros)});
      }
      RulePtr otherwise = chance(50) ? gen_rule(depth + 1, scope, callable_macros) : nullptr;
      return r_case(std::move(scrutinee), std::move(arms), std::move(otherwise));
    }
    if (kind == "macro_call") {
      const MacroDecl& mac = m.macros[draw(callable_macros)];
      std::vector<TermPtr> args;
      for (const auto& f : mac.formals) args.push_back(gen_term(dom_of(f.domain), scope, 1));
      return r_call(mac.name, std::move(args));
    }
    return gen_update(scope);
  }

  void gen_macros() {
    int n = static_cast<int>(irange(1, cfg.max_macros));
    for (int i = 0; i < n; ++i) {
      MacroDecl mac;
      mac.name = "m" + std::to_string(i);
      int arity = static_cast<int>(draw(3));
      Scope scope;
      for (int a = 0; a < arity; ++a) {
        const GDom& g = pick_dom();
        mac.formals.push_back({"$a" + std::to_string(a), g.ref});
        scope.emplace_back(mac.formals.back().var, g.dom);
      }
      // a macro may call only earlier macros: the call graph stays acyclic
      mac.body = gen_rule(1, scope, static_cast<size_t>(i));
      m.macros.push_back(std::move(mac));
    }
  }

  Model build() {
    m.name = "Gen" + std::to_string(cfg.seed);
    gen_domains();
    gen_functions();
    gen_definitions();
    gen_macros();
    m.main_name = "r_main";
    m.main_rule = gen_rule(0, {}, m.macros.size());
    if (chance(15)) m.invariants.push_back({"holds", gen_bool({}, 1), {}});
    gen_init();
    return std::move(m);
  }
};

} // namespace

Model gen_model(const GenConfig& config) { return Gen(config).build(); }

} // namespace asmf
