#include "asmf/printer.hpp"

#include <sstream>

namespace asmf {

namespace {

// Binding strengths used to decide parenthesization. ChooseOne is weakest so
// it is parenthesized everywhere except at a top-level position.
enum Prec : int {
  PrecPick = 0,
  PrecImplies = 1,
  PrecOr = 2,
  PrecAnd = 3,
  PrecNot = 4,
  PrecCmp = 5,
  PrecAdd = 6,
  PrecMul = 7,
  PrecUnary = 8,
  PrecPrimary = 9,
};

int op_prec(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::Implies: return PrecImplies;
    case BuiltinOp::Or: return PrecOr;
    case BuiltinOp::And: return PrecAnd;
    case BuiltinOp::Not: return PrecNot;
    case BuiltinOp::Eq:
    case BuiltinOp::Ne:
    case BuiltinOp::Lt:
    case BuiltinOp::Le:
    case BuiltinOp::Gt:
    case BuiltinOp::Ge: return PrecCmp;
    case BuiltinOp::Add:
    case BuiltinOp::Sub: return PrecAdd;
    case BuiltinOp::Mul: return PrecMul;
  }
  return PrecPrimary;
}

struct Printer {
  std::ostringstream out;

  void indent(int depth) {
    for (int i = 0; i < depth; ++i) out << "  ";
  }

  int term_prec(const TermPtr& t) {
    struct V {
      int operator()(const BoolLit&) const { return PrecPrimary; }
      int operator()(const IntLit& n) const { return n.value < 0 ? PrecUnary : PrecPrimary; }
      int operator()(const SymLit&) const { return PrecPrimary; }
      int operator()(const UndefLit&) const { return PrecPrimary; }
      int operator()(const Var&) const { return PrecPrimary; }
      int operator()(const Apply&) const { return PrecPrimary; }
      int operator()(const Builtin& b) const { return op_prec(b.op); }
      int operator()(const IsDef&) const { return PrecPrimary; }
      int operator()(const ChooseOne&) const { return PrecPick; }
    };
    return std::visit(V{}, t->node);
  }

  void term(const TermPtr& t, int parent = PrecPick) {
    if (!t) {
      out << "<missing>";
      return;
    }
    bool parens = term_prec(t) < parent;
    if (parens) out << "(";
    struct V {
      Printer& p;
      void operator()(const BoolLit& b) { p.out << (b.value ? "true" : "false"); }
      void operator()(const IntLit& n) { p.out << n.value; }
      void operator()(const SymLit& s) { p.out << s.value; }
      void operator()(const UndefLit&) { p.out << "undef"; }
      void operator()(const Var& v) { p.out << v.name; }
      void operator()(const Apply& a) {
        p.out << a.fn;
        if (!a.args.empty()) {
          p.out << "(";
          for (size_t i = 0; i < a.args.size(); ++i) {
            if (i) p.out << ", ";
            p.term(a.args[i]);
          }
          p.out << ")";
        }
      }
      void operator()(const Builtin& b) {
        int prec = op_prec(b.op);
        switch (b.op) {
          case BuiltinOp::Not:
            p.out << "not ";
            p.term(b.args[0], PrecCmp);
            return;
          case BuiltinOp::Implies:
            // right-associative: parenthesize a nested implies on the left
            p.term(b.args[0], prec + 1);
            p.out << " implies ";
            p.term(b.args[1], prec);
            return;
          case BuiltinOp::Eq:
          case BuiltinOp::Ne:
          case BuiltinOp::Lt:
          case BuiltinOp::Le:
          case BuiltinOp::Gt:
          case BuiltinOp::Ge:
            // non-associative: both operands stricter
            p.term(b.args[0], prec + 1);
            p.out << " " << builtin_name(b.op) << " ";
            p.term(b.args[1], prec + 1);
            return;
          default:
            p.term(b.args[0], prec);
            p.out << " " << builtin_name(b.op) << " ";
            p.term(b.args[1], prec + 1);
            return;
        }
      }
      void operator()(const IsDef& i) {
        p.out << "isDef(";
        p.term(i.arg);
        p.out << ")";
      }
      void operator()(const ChooseOne& c) {
        p.out << "pick " << c.var << " in " << c.domain.str() << " with ";
        p.term(c.guard, PrecImplies);
        p.out << " : ";
        p.term(c.result, PrecImplies);
      }
    };
    std::visit(V{*this}, t->node);
    if (parens) out << ")";
  }

  void rule(const RulePtr& r, int depth) {
    if (!r) {
      indent(depth);
      out << "skip\n";
      return;
    }
    struct V {
      Printer& p;
      int d;
      void operator()(const Update& u) {
        p.indent(d);
        p.term(u.target);
        p.out << " := ";
        p.term(u.value);
        p.out << "\n";
      }
      void operator()(const Par& par) {
        p.indent(d);
        p.out << "par\n";
        for (const auto& c : par.children) p.rule(c, d + 1);
        p.indent(d);
        p.out << "endpar\n";
      }
      void operator()(const Cond& c) {
        p.indent(d);
        p.out << "if ";
        p.term(c.guard);
        p.out << " then\n";
        p.rule(c.then_rule, d + 1);
        if (c.else_rule) {
          p.indent(d);
          p.out << "else\n";
          p.rule(c.else_rule, d + 1);
        }
        p.indent(d);
        p.out << "endif\n";
      }
      void operator()(const MacroCall& m) {
        p.indent(d);
        p.out << m.name << "[";
        for (size_t i = 0; i < m.args.size(); ++i) {
          if (i) p.out << ", ";
          p.term(m.args[i]);
        }
        p.out << "]\n";
      }
      void operator()(const ProgramCall& pc) {
        p.indent(d);
        p.out << "program(";
        p.term(pc.agent);
        p.out << ")\n";
      }
      void operator()(const Forall& f) {
        p.indent(d);
        p.out << "forall ";
        for (size_t i = 0; i < f.binders.size(); ++i) {
          if (i) p.out << ", ";
          p.out << f.binders[i].var << " in " << f.binders[i].domain.str();
        }
        p.out << " with ";
        p.term(f.guard);
        p.out << " do\n";
        p.rule(f.body, d + 1);
      }
      void operator()(const Choose& c) {
        p.indent(d);
        p.out << "choose " << c.binder.var << " in " << c.binder.domain.str() << " with ";
        p.term(c.guard);
        p.out << " do\n";
        p.rule(c.body, d + 1);
        if (c.ifnone) {
          p.indent(d);
          p.out << "ifnone\n";
          p.rule(c.ifnone, d + 1);
        }
        p.indent(d);
        p.out << "endchoose\n";
      }
      void operator()(const Let& l) {
        p.indent(d);
        p.out << "let (";
        for (size_t i = 0; i < l.bindings.size(); ++i) {
          if (i) p.out << ", ";
          p.out << l.bindings[i].var << " = ";
          p.term(l.bindings[i].value);
        }
        p.out << ") in\n";
        p.rule(l.body, d + 1);
        p.indent(d);
        p.out << "endlet\n";
      }
      void operator()(const Case& c) {
        p.indent(d);
        p.out << "switch ";
        p.term(c.scrutinee, PrecImplies);
        p.out << "\n";
        for (const auto& arm : c.arms) {
          p.indent(d);
          p.out << "case ";
          p.term(arm.label, PrecImplies);
          p.out << " :\n";
          p.rule(arm.rule, d + 1);
        }
        if (c.otherwise) {
          p.indent(d);
          p.out << "otherwise\n";
          p.rule(c.otherwise, d + 1);
        }
        p.indent(d);
        p.out << "endswitch\n";
      }
      void operator()(const Skip&) {
        p.indent(d);
        p.out << "skip\n";
      }
    };
    std::visit(V{*this, depth}, r->node);
  }

  void model(const Model& m) {
    out << "asm " << m.name << "\n";
    if (!m.domains.empty() || !m.functions.empty()) {
      out << "\nsignature:\n";
      for (const auto& d : m.domains) {
        out << "  ";
        switch (d.kind) {
          case Domain::Kind::Boolean:
            break; // builtin, never declared
          case Domain::Kind::IntRange:
            out << "domain " << d.name << " = [" << d.lo << " .. " << d.hi << "]\n";
            break;
          case Domain::Kind::Enum:
          case Domain::Kind::AgentSet:
            out << (d.kind == Domain::Kind::Enum ? "domain " : "agentset ") << d.name << " = { ";
            for (size_t i = 0; i < d.elements.size(); ++i) {
              if (i) out << ", ";
              out << d.elements[i];
            }
            out << " }\n";
            break;
        }
      }
      for (const auto& f : m.functions) {
        out << "  " << function_kind_name(f.kind) << " " << f.name << " : ";
        for (const auto& param : f.params) out << param.str() << (&param == &f.params.back() ? " -> " : " * ");
        out << f.result.str() << "\n";
      }
    }
    bool have_defs = !m.definitions.empty() || !m.macros.empty() || !m.invariants.empty() ||
                     !m.programs.empty() || m.main_rule != nullptr;
    if (have_defs) {
      out << "\ndefinitions:\n";
      for (const auto& def : m.definitions) {
        out << "  function " << def.name;
        if (!def.formals.empty()) {
          out << "(";
          for (size_t i = 0; i < def.formals.size(); ++i) {
            if (i) out << ", ";
            out << def.formals[i].var << " in " << def.formals[i].domain.str();
          }
          out << ")";
        }
        out << " = ";
        if (def.is_table) {
          out << "{ ";
          for (size_t i = 0; i < def.entries.size(); ++i) {
            if (i) out << ", ";
            out << "(";
            for (size_t j = 0; j < def.entries[i].args.size(); ++j) {
              if (j) out << ", ";
              out << def.entries[i].args[j].str();
            }
            out << ") -> " << def.entries[i].value.str();
          }
          out << " }\n";
        } else {
          term(def.body);
          out << "\n";
        }
      }
      for (const auto& mac : m.macros) {
        out << "  rule " << mac.name;
        if (!mac.formals.empty()) {
          out << "(";
          for (size_t i = 0; i < mac.formals.size(); ++i) {
            if (i) out << ", ";
            out << mac.formals[i].var << " in " << mac.formals[i].domain.str();
          }
          out << ")";
        }
        out << " =\n";
        rule(mac.body, 2);
      }
      for (const auto& inv : m.invariants) {
        out << "  invariant " << inv.name << " : ";
        term(inv.condition);
        out << "\n";
      }
      for (const auto& prog : m.programs)
        out << "  agent " << prog.agent_set << " : " << prog.macro << "\n";
      if (m.main_rule) {
        out << "  main rule " << (m.main_name.empty() ? "r_main" : m.main_name) << " =\n";
        rule(m.main_rule, 2);
      }
    }
    if (!m.init.empty()) {
      out << "\ninit:\n";
      for (const auto& entry : m.init) {
        out << "  " << entry.fn;
        if (!entry.args.empty()) {
          out << "(";
          for (size_t i = 0; i < entry.args.size(); ++i) {
            if (i) out << ", ";
            out << entry.args[i].str();
          }
          out << ")";
        }
        out << " = " << entry.value.str() << "\n";
      }
    }
  }
};

} // namespace

std::string print_model(const Model& m) {
  Printer p;
  p.model(m);
  return p.out.str();
}

std::string print_term(const TermPtr& t) {
  Printer p;
  p.term(t);
  return p.out.str();
}

std::string print_rule(const RulePtr& r, int indent) {
  Printer p;
  p.rule(r, indent);
  return p.out.str();
}

} // namespace asmf
