#include "asmf/parser.hpp"

#include <stdexcept>

#include "asmf/lexer.hpp"

namespace asmf {

namespace {

struct Panic {};

struct Parser {
  const std::vector<Token>& toks;
  const ParseOptions& opts;
  std::vector<Diagnostic>& errors;
  size_t pos = 0;

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos + ahead;
    if (i >= toks.size()) i = toks.size() - 1;
    return toks[i];
  }
  bool at(Tok k) const { return peek().kind == k; }
  const Token& advance() {
    const Token& t = toks[pos];
    if (pos + 1 < toks.size()) ++pos;
    return t;
  }
  bool eat(Tok k) {
    if (at(k)) {
      advance();
      return true;
    }
    return false;
  }
  void error_here(const std::string& msg) {
    errors.push_back({"E_PARSE", msg, peek().line, peek().column});
  }
  [[noreturn]] void panic(const std::string& msg) {
    error_here(msg);
    throw Panic{};
  }
  Token expect(Tok k, const std::string& what) {
    if (at(k)) return advance();
    panic("expected " + what + ", found " + token_name(peek().kind) +
          (peek().text.empty() ? "" : " '" + peek().text + "'"));
  }

  static SourceSpan span_of(const Token& t) { return {t.begin, t.end, t.line, t.column}; }
  SourceSpan span_from(const Token& first) const {
    SourceSpan s = span_of(first);
    if (pos > 0) s.end = toks[pos - 1].end;
    return s;
  }

  // --- names -------------------------------------------------------------

  std::string var_name() {
    Token t = expect(Tok::VarId, "a variable");
    if (!opts.allow_reserved_names && t.text.rfind("$flat_", 0) == 0)
      errors.push_back({"E_RESERVED",
                        "variable names starting with '$flat_' are reserved for generated code",
                        t.line, t.column});
    return t.text;
  }

  // Declared function/rule names; the flat_ prefix is reserved for functions
  // introduced by the flattening passes.
  std::string declared_name(const char* what) {
    Token t = expect(Tok::LowerId, what);
    if (!opts.allow_reserved_names && t.text.rfind("flat_", 0) == 0)
      errors.push_back({"E_RESERVED",
                        "names starting with 'flat_' are reserved for generated code", t.line,
                        t.column});
    return t.text;
  }

  DomainRef domain_ref() {
    if (at(Tok::UpperId)) {
      Token t = advance();
      if (t.text == "Boolean") return DomainRef::boolean();
      return DomainRef::named(t.text);
    }
    if (at(Tok::LBracket)) {
      advance();
      int64_t lo = int_literal();
      expect(Tok::DotDot, "'..'");
      int64_t hi = int_literal();
      expect(Tok::RBracket, "']'");
      if (lo > hi) error_here("empty range: lower bound exceeds upper bound");
      return DomainRef::range(lo, hi);
    }
    panic("expected a domain (name, Boolean, or [lo .. hi])");
  }

  int64_t int_literal() {
    bool neg = eat(Tok::Minus);
    Token t = expect(Tok::Int, "an integer");
    try {
      int64_t v = std::stoll(t.text);
      return neg ? -v : v;
    } catch (const std::exception&) {
      errors.push_back({"E_PARSE", "integer literal out of range", t.line, t.column});
      return 0;
    }
  }

  // Literal values as used in init entries and function tables.
  Value value_literal() {
    if (eat(Tok::KwTrue)) return Value::boolean(true);
    if (eat(Tok::KwFalse)) return Value::boolean(false);
    if (eat(Tok::KwUndef)) return Value::undef();
    if (at(Tok::UpperId)) return Value::symbol(advance().text);
    if (at(Tok::Int) || at(Tok::Minus)) return Value::integer(int_literal());
    panic("expected a literal value");
  }

  // --- terms -------------------------------------------------------------

  TermPtr term() { return term_implies(); }

  TermPtr term_implies() {
    Token first = peek();
    TermPtr lhs = term_or();
    if (eat(Tok::KwImplies)) {
      TermPtr rhs = term_implies(); // right-associative
      return make_term(Builtin{BuiltinOp::Implies, {lhs, rhs}}, first);
    }
    return lhs;
  }

  TermPtr term_or() {
    Token first = peek();
    TermPtr lhs = term_and();
    while (eat(Tok::KwOr)) {
      TermPtr rhs = term_and();
      lhs = make_term(Builtin{BuiltinOp::Or, {lhs, rhs}}, first);
    }
    return lhs;
  }

  TermPtr term_and() {
    Token first = peek();
    TermPtr lhs = term_not();
    while (eat(Tok::KwAnd)) {
      TermPtr rhs = term_not();
      lhs = make_term(Builtin{BuiltinOp::And, {lhs, rhs}}, first);
    }
    return lhs;
  }

  TermPtr term_not() {
    if (at(Tok::KwNot)) {
      Token first = advance();
      TermPtr arg = term_not();
      return make_term(Builtin{BuiltinOp::Not, {arg}}, first);
    }
    return term_cmp();
  }

  TermPtr term_cmp() {
    Token first = peek();
    TermPtr lhs = term_add();
    BuiltinOp op;
    if (eat(Tok::Eq)) op = BuiltinOp::Eq;
    else if (eat(Tok::Ne)) op = BuiltinOp::Ne;
    else if (eat(Tok::Lt)) op = BuiltinOp::Lt;
    else if (eat(Tok::Le)) op = BuiltinOp::Le;
    else if (eat(Tok::Gt)) op = BuiltinOp::Gt;
    else if (eat(Tok::Ge)) op = BuiltinOp::Ge;
    else return lhs;
    TermPtr rhs = term_add();
    if (at(Tok::Eq) || at(Tok::Ne) || at(Tok::Lt) || at(Tok::Le) || at(Tok::Gt) || at(Tok::Ge))
      panic("comparisons do not chain; parenthesize");
    return make_term(Builtin{op, {lhs, rhs}}, first);
  }

  TermPtr term_add() {
    Token first = peek();
    TermPtr lhs = term_mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      BuiltinOp op = advance().kind == Tok::Plus ? BuiltinOp::Add : BuiltinOp::Sub;
      TermPtr rhs = term_mul();
      lhs = make_term(Builtin{op, {lhs, rhs}}, first);
    }
    return lhs;
  }

  TermPtr term_mul() {
    Token first = peek();
    TermPtr lhs = term_unary();
    while (eat(Tok::Star)) {
      TermPtr rhs = term_unary();
      lhs = make_term(Builtin{BuiltinOp::Mul, {lhs, rhs}}, first);
    }
    return lhs;
  }

  TermPtr term_unary() {
    if (at(Tok::Minus)) {
      Token first = advance();
      Token num = expect(Tok::Int, "an integer after unary '-'");
      try {
        return make_term(IntLit{-std::stoll(num.text)}, first);
      } catch (const std::exception&) {
        errors.push_back({"E_PARSE", "integer literal out of range", num.line, num.column});
        return make_term(IntLit{0}, first);
      }
    }
    return term_primary();
  }

  TermPtr term_primary() {
    Token first = peek();
    switch (first.kind) {
      case Tok::KwTrue: advance(); return make_term(BoolLit{true}, first);
      case Tok::KwFalse: advance(); return make_term(BoolLit{false}, first);
      case Tok::KwUndef: advance(); return make_term(UndefLit{}, first);
      case Tok::KwSelf: advance(); return make_term(Var{"self"}, first);
      case Tok::Int: {
        advance();
        try {
          return make_term(IntLit{std::stoll(first.text)}, first);
        } catch (const std::exception&) {
          errors.push_back({"E_PARSE", "integer literal out of range", first.line, first.column});
          return make_term(IntLit{0}, first);
        }
      }
      case Tok::VarId: {
        std::string name = var_name();
        return make_term(Var{std::move(name)}, first);
      }
      case Tok::UpperId: advance(); return make_term(SymLit{first.text}, first);
      case Tok::LowerId: {
        advance();
        std::vector<TermPtr> args;
        if (eat(Tok::LParen)) {
          if (!at(Tok::RParen)) {
            do {
              args.push_back(term());
            } while (eat(Tok::Comma));
          }
          expect(Tok::RParen, "')'");
        }
        return make_term(Apply{first.text, std::move(args)}, first);
      }
      case Tok::KwIsDef: {
        advance();
        expect(Tok::LParen, "'('");
        TermPtr arg = term();
        expect(Tok::RParen, "')'");
        return make_term(IsDef{std::move(arg)}, first);
      }
      case Tok::KwPick: {
        advance();
        std::string v = var_name();
        expect(Tok::KwIn, "'in'");
        DomainRef dom = domain_ref();
        expect(Tok::KwWith, "'with'");
        TermPtr guard = term();
        TermPtr result;
        if (eat(Tok::Colon)) result = term();
        else result = make_term(Var{v}, first);
        return make_term(ChooseOne{std::move(v), std::move(dom), std::move(guard),
                                   std::move(result)},
                         first);
      }
      case Tok::LParen: {
        advance();
        TermPtr inner = term();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default:
        panic(std::string("expected a term, found ") + token_name(first.kind));
    }
  }

  template <typename Node>
  TermPtr make_term(Node&& node, const Token& first) {
    return std::make_shared<Term>(Term{std::forward<Node>(node), span_from(first)});
  }
  template <typename Node>
  RulePtr make_rule(Node&& node, const Token& first) {
    return std::make_shared<Rule>(Rule{std::forward<Node>(node), span_from(first)});
  }

  // --- rules -------------------------------------------------------------

  RulePtr rule() {
    Token first = peek();
    switch (first.kind) {
      case Tok::KwSkip:
        advance();
        return make_rule(Skip{}, first);
      case Tok::KwPar: {
        advance();
        std::vector<RulePtr> children;
        while (!at(Tok::KwEndpar) && !at(Tok::End)) children.push_back(rule());
        expect(Tok::KwEndpar, "'endpar'");
        return make_rule(Par{std::move(children)}, first);
      }
      case Tok::KwIf: {
        advance();
        TermPtr guard = term();
        expect(Tok::KwThen, "'then'");
        RulePtr then_rule = rule();
        RulePtr else_rule;
        if (eat(Tok::KwElse)) else_rule = rule();
        expect(Tok::KwEndif, "'endif'");
        return make_rule(Cond{std::move(guard), std::move(then_rule), std::move(else_rule)},
                         first);
      }
      case Tok::KwForall: {
        advance();
        std::vector<Binder> binders;
        do {
          std::string v = var_name();
          expect(Tok::KwIn, "'in'");
          binders.push_back({std::move(v), domain_ref()});
        } while (eat(Tok::Comma));
        TermPtr guard = eat(Tok::KwWith) ? term() : t_bool(true);
        expect(Tok::KwDo, "'do'");
        RulePtr body = rule();
        return make_rule(Forall{std::move(binders), std::move(guard), std::move(body)}, first);
      }
      case Tok::KwChoose: {
        advance();
        std::string v = var_name();
        expect(Tok::KwIn, "'in'");
        DomainRef dom = domain_ref();
        expect(Tok::KwWith, "'with'");
        TermPtr guard = term();
        expect(Tok::KwDo, "'do'");
        RulePtr body = rule();
        RulePtr ifnone;
        if (eat(Tok::KwIfnone)) ifnone = rule();
        eat(Tok::KwEndchoose); // optional terminator; always printed
        return make_rule(Choose{{std::move(v), std::move(dom)}, std::move(guard),
                                std::move(body), std::move(ifnone)},
                         first);
      }
      case Tok::KwLet: {
        advance();
        expect(Tok::LParen, "'('");
        std::vector<LetBinding> bindings;
        do {
          std::string v = var_name();
          expect(Tok::Eq, "'='");
          bindings.push_back({std::move(v), term()});
        } while (eat(Tok::Comma));
        expect(Tok::RParen, "')'");
        expect(Tok::KwIn, "'in'");
        RulePtr body = rule();
        expect(Tok::KwEndlet, "'endlet'");
        return make_rule(Let{std::move(bindings), std::move(body)}, first);
      }
      case Tok::KwSwitch: {
        advance();
        TermPtr scrutinee = term();
        std::vector<CaseArm> arms;
        while (eat(Tok::KwCase)) {
          TermPtr label = term();
          expect(Tok::Colon, "':'");
          arms.push_back({std::move(label), rule()});
        }
        if (arms.empty()) error_here("'switch' needs at least one 'case'");
        RulePtr otherwise;
        if (eat(Tok::KwOtherwise)) otherwise = rule();
        expect(Tok::KwEndswitch, "'endswitch'");
        return make_rule(Case{std::move(scrutinee), std::move(arms), std::move(otherwise)},
                         first);
      }
      case Tok::KwProgram: {
        advance();
        expect(Tok::LParen, "'('");
        TermPtr agent = term();
        expect(Tok::RParen, "')'");
        return make_rule(ProgramCall{std::move(agent)}, first);
      }
      case Tok::LowerId: {
        advance();
        if (eat(Tok::LBracket)) {
          std::vector<TermPtr> args;
          if (!at(Tok::RBracket)) {
            do {
              args.push_back(term());
            } while (eat(Tok::Comma));
          }
          expect(Tok::RBracket, "']'");
          return make_rule(MacroCall{first.text, std::move(args)}, first);
        }
        std::vector<TermPtr> args;
        if (eat(Tok::LParen)) {
          if (!at(Tok::RParen)) {
            do {
              args.push_back(term());
            } while (eat(Tok::Comma));
          }
          expect(Tok::RParen, "')'");
        }
        TermPtr target = make_term(Apply{first.text, std::move(args)}, first);
        expect(Tok::Assign, "':='");
        TermPtr value = term();
        return make_rule(Update{std::move(target), std::move(value)}, first);
      }
      default:
        panic(std::string("expected a rule, found ") + token_name(first.kind));
    }
  }

  // --- declarations ------------------------------------------------------

  bool at_decl_start() const {
    switch (peek().kind) {
      case Tok::KwDomain:
      case Tok::KwAgentset:
      case Tok::KwStatic:
      case Tok::KwMonitored:
      case Tok::KwControlled:
      case Tok::KwDerived:
      case Tok::KwFunction:
      case Tok::KwRule:
      case Tok::KwMain:
      case Tok::KwInvariant:
      case Tok::KwAgent:
        return true;
      default:
        return false;
    }
  }
  bool at_section_start() const {
    switch (peek().kind) {
      case Tok::KwSignature:
      case Tok::KwDefinitions:
      case Tok::KwInit:
        return true;
      default:
        return false;
    }
  }

  void sync() {
    while (!at(Tok::End) && !at_decl_start() && !at_section_start()) advance();
  }

  std::vector<Binder> formals() {
    std::vector<Binder> out;
    if (eat(Tok::LParen)) {
      if (!at(Tok::RParen)) {
        do {
          std::string v = var_name();
          expect(Tok::KwIn, "'in'");
          out.push_back({std::move(v), domain_ref()});
        } while (eat(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
    }
    return out;
  }

  void signature_decl(Model& m) {
    Token first = peek();
    if (eat(Tok::KwDomain) || (at(Tok::KwAgentset) && (advance(), true))) {
      bool is_agents = first.kind == Tok::KwAgentset;
      Token name = expect(Tok::UpperId, "a domain name");
      if (name.text == "Boolean") error_here("Boolean is built in and cannot be redeclared");
      expect(Tok::Eq, "'='");
      if (!is_agents && at(Tok::LBracket)) {
        advance();
        int64_t lo = int_literal();
        expect(Tok::DotDot, "'..'");
        int64_t hi = int_literal();
        expect(Tok::RBracket, "']'");
        if (lo > hi) error_here("empty range: lower bound exceeds upper bound");
        m.domains.push_back(Domain::int_range(lo, hi, name.text));
        return;
      }
      expect(Tok::LBrace, "'{'");
      std::vector<std::string> elems;
      if (!at(Tok::RBrace)) {
        do {
          elems.push_back(expect(Tok::UpperId, "an element name").text);
        } while (eat(Tok::Comma));
      }
      expect(Tok::RBrace, "'}'");
      if (elems.empty()) error_here("a domain needs at least one element");
      if (is_agents) m.domains.push_back(Domain::agent_set(name.text, std::move(elems)));
      else m.domains.push_back(Domain::enumeration(name.text, std::move(elems)));
      return;
    }
    FunctionKind kind;
    if (eat(Tok::KwStatic)) kind = FunctionKind::Static;
    else if (eat(Tok::KwMonitored)) kind = FunctionKind::Monitored;
    else if (eat(Tok::KwControlled)) kind = FunctionKind::Controlled;
    else if (eat(Tok::KwDerived)) kind = FunctionKind::Derived;
    else panic("expected a signature declaration");
    std::string fname = declared_name("a function name");
    expect(Tok::Colon, "':'");
    FunctionDecl decl;
    decl.name = fname;
    decl.kind = kind;
    DomainRef head = domain_ref();
    if (at(Tok::Star) || at(Tok::Arrow)) {
      decl.params.push_back(std::move(head));
      while (eat(Tok::Star)) decl.params.push_back(domain_ref());
      expect(Tok::Arrow, "'->'");
      decl.result = domain_ref();
    } else {
      decl.result = std::move(head);
    }
    decl.span = span_from(first);
    m.functions.push_back(std::move(decl));
  }

  void definitions_decl(Model& m) {
    Token first = peek();
    if (eat(Tok::KwFunction)) {
      FunctionDef def;
      def.name = declared_name("a function name");
      def.formals = formals();
      expect(Tok::Eq, "'='");
      if (at(Tok::LBrace)) {
        advance();
        def.is_table = true;
        if (!def.formals.empty())
          error_here("a table definition does not take formal parameters");
        do {
          FunctionDef::TableEntry entry;
          expect(Tok::LParen, "'('");
          if (!at(Tok::RParen)) {
            do {
              entry.args.push_back(value_literal());
            } while (eat(Tok::Comma));
          }
          expect(Tok::RParen, "')'");
          expect(Tok::Arrow, "'->'");
          entry.value = value_literal();
          def.entries.push_back(std::move(entry));
        } while (eat(Tok::Comma));
        expect(Tok::RBrace, "'}'");
      } else {
        def.body = term();
      }
      def.span = span_from(first);
      m.definitions.push_back(std::move(def));
      return;
    }
    if (eat(Tok::KwRule)) {
      MacroDecl mac;
      mac.name = declared_name("a rule name");
      mac.formals = formals();
      expect(Tok::Eq, "'='");
      mac.body = rule();
      mac.span = span_from(first);
      m.macros.push_back(std::move(mac));
      return;
    }
    if (eat(Tok::KwMain)) {
      expect(Tok::KwRule, "'rule'");
      Token name = expect(Tok::LowerId, "a rule name");
      expect(Tok::Eq, "'='");
      RulePtr body = rule();
      if (m.main_rule) {
        errors.push_back({"E_PARSE", "duplicate main rule", name.line, name.column});
        return;
      }
      m.main_name = name.text;
      m.main_rule = std::move(body);
      return;
    }
    if (eat(Tok::KwInvariant)) {
      Invariant inv;
      inv.name = expect(Tok::LowerId, "an invariant name").text;
      expect(Tok::Colon, "':'");
      inv.condition = term();
      inv.span = span_from(first);
      m.invariants.push_back(std::move(inv));
      return;
    }
    if (eat(Tok::KwAgent)) {
      AgentBinding binding;
      binding.agent_set = expect(Tok::UpperId, "an agent set name").text;
      expect(Tok::Colon, "':'");
      binding.macro = expect(Tok::LowerId, "a rule name").text;
      binding.span = span_from(first);
      m.programs.push_back(std::move(binding));
      return;
    }
    panic("expected a definition (function, rule, main rule, invariant, or agent)");
  }

  void init_entry(Model& m) {
    Token first = expect(Tok::LowerId, "a function name");
    InitEntry entry;
    entry.fn = first.text;
    if (eat(Tok::LParen)) {
      if (!at(Tok::RParen)) {
        do {
          entry.args.push_back(value_literal());
        } while (eat(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
    }
    expect(Tok::Eq, "'='");
    entry.value = value_literal();
    entry.span = span_from(first);
    m.init.push_back(std::move(entry));
  }

  Model model() {
    Model m;
    try {
      expect(Tok::KwAsm, "'asm'");
      m.name = expect(Tok::UpperId, "a model name").text;
    } catch (const Panic&) {
      sync();
    }
    while (!at(Tok::End)) {
      if (eat(Tok::KwSignature)) {
        if (!eat(Tok::Colon)) error_here("expected ':' after 'signature'");
        while (at_decl_start()) {
          try {
            signature_decl(m);
          } catch (const Panic&) {
            sync();
          }
        }
      } else if (eat(Tok::KwDefinitions)) {
        if (!eat(Tok::Colon)) error_here("expected ':' after 'definitions'");
        while (at_decl_start()) {
          try {
            definitions_decl(m);
          } catch (const Panic&) {
            sync();
          }
        }
      } else if (eat(Tok::KwInit)) {
        if (!eat(Tok::Colon)) error_here("expected ':' after 'init'");
        while (at(Tok::LowerId)) {
          try {
            init_entry(m);
          } catch (const Panic&) {
            sync();
          }
        }
      } else {
        error_here(std::string("expected a section, found ") + token_name(peek().kind));
        advance();
        sync();
      }
    }
    return m;
  }
};

} // namespace

ParseResult parse_model(const std::string& source, const ParseOptions& opts) {
  ParseResult out;
  LexResult lexed = lex(source);
  out.errors = lexed.errors;
  Parser p{lexed.tokens, opts, out.errors};
  try {
    out.model = p.model();
  } catch (const Panic&) {
    // model() handles recovery internally; reaching here means a malformed
    // section header at top level — diagnostics already recorded.
  }
  return out;
}

namespace {

[[noreturn]] void throw_diags(const std::vector<Diagnostic>& ds) {
  throw std::runtime_error(join_diagnostics(ds));
}

} // namespace

TermPtr parse_term(const std::string& source, const ParseOptions& opts) {
  LexResult lexed = lex(source);
  if (!lexed.errors.empty()) throw_diags(lexed.errors);
  std::vector<Diagnostic> errors;
  Parser p{lexed.tokens, opts, errors};
  TermPtr t;
  try {
    t = p.term();
    if (!p.at(Tok::End)) p.panic("trailing input after term");
  } catch (const Panic&) {
  }
  if (!errors.empty()) throw_diags(errors);
  return t;
}

RulePtr parse_rule(const std::string& source, const ParseOptions& opts) {
  LexResult lexed = lex(source);
  if (!lexed.errors.empty()) throw_diags(lexed.errors);
  std::vector<Diagnostic> errors;
  Parser p{lexed.tokens, opts, errors};
  RulePtr r;
  try {
    r = p.rule();
    if (!p.at(Tok::End)) p.panic("trailing input after rule");
  } catch (const Panic&) {
  }
  if (!errors.empty()) throw_diags(errors);
  return r;
}

} // namespace asmf
