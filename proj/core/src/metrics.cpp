#include "asmf/metrics.hpp"

#include <cmath>
#include <sstream>

namespace asmf {

namespace {

void count_into(const RulePtr& r, RuleHistogram& h) {
  if (!r) return;
  struct V {
    RuleHistogram& h;
    void go(const RulePtr& r) { count_into(r, h); }
    void operator()(const Update&) { ++h.update; }
    void operator()(const Par& p) {
      ++h.parallel;
      for (const auto& c : p.children) go(c);
    }
    void operator()(const Cond& c) {
      ++h.conditional;
      go(c.then_rule);
      go(c.else_rule);
    }
    void operator()(const MacroCall&) { ++h.macro_call; }
    void operator()(const ProgramCall&) { ++h.macro_call; }
    void operator()(const Forall& f) {
      ++h.forall;
      go(f.body);
    }
    void operator()(const Choose& c) {
      ++h.choose;
      go(c.body);
      go(c.ifnone);
    }
    void operator()(const Let& l) {
      ++h.let_rule;
      go(l.body);
    }
    void operator()(const Case& c) {
      ++h.case_rule;
      for (const auto& arm : c.arms) go(arm.rule);
      go(c.otherwise);
    }
    void operator()(const Skip&) { ++h.skip; }
  };
  std::visit(V{h}, r->node);
}

} // namespace

RuleHistogram count_rules(const RulePtr& r) {
  RuleHistogram h;
  count_into(r, h);
  return h;
}

RuleHistogram count_rules(const Model& m) {
  RuleHistogram h;
  count_into(m.main_rule, h);
  for (const auto& mac : m.macros) count_into(mac.body, h);
  return h;
}

std::string RuleHistogram::table() const {
  std::ostringstream os;
  os << "update      " << update << '\n'
     << "parallel    " << parallel << '\n'
     << "conditional " << conditional << '\n'
     << "forall      " << forall << '\n'
     << "choose      " << choose << '\n'
     << "case        " << case_rule << '\n'
     << "let         " << let_rule << '\n'
     << "macro-call  " << macro_call << '\n'
     << "skip        " << skip << '\n'
     << "total       " << total() << '\n';
  return os.str();
}

std::string RuleHistogram::csv() const {
  std::ostringstream os;
  os << "update,parallel,conditional,forall,choose,case,let,macro-call,skip,total\n"
     << update << ',' << parallel << ',' << conditional << ',' << forall << ','
     << choose << ',' << case_rule << ',' << let_rule << ',' << macro_call << ','
     << skip << ',' << total() << '\n';
  return os.str();
}

int64_t delta_percent(int64_t after, int64_t before) {
  if (before <= 0) throw MetricError("delta_percent: before must be positive");
  double ratio = 100.0 * static_cast<double>(after - before) / static_cast<double>(before);
  return std::llround(ratio);
}

namespace {

int nesting(const RulePtr& r) {
  if (!r) return 0;
  struct V {
    int go(const RulePtr& r) const { return nesting(r); }
    int operator()(const Update&) const { return 1; }
    int operator()(const Par& p) const {
      int best = 0;
      for (const auto& c : p.children) best = std::max(best, go(c));
      return 1 + best;
    }
    int operator()(const Cond& c) const {
      return 1 + std::max(go(c.then_rule), go(c.else_rule));
    }
    int operator()(const MacroCall&) const { return 1; }
    int operator()(const ProgramCall&) const { return 1; }
    int operator()(const Forall& f) const { return 1 + go(f.body); }
    int operator()(const Choose& c) const { return 1 + std::max(go(c.body), go(c.ifnone)); }
    int operator()(const Let& l) const { return 1 + go(l.body); }
    int operator()(const Case& c) const {
      int best = go(c.otherwise);
      for (const auto& arm : c.arms) best = std::max(best, go(arm.rule));
      return 1 + best;
    }
    int operator()(const Skip&) const { return 1; }
  };
  return std::visit(V{}, r->node);
}

} // namespace

int max_nesting(const RulePtr& r) { return nesting(r); }

int max_nesting(const Model& m) {
  int best = nesting(m.main_rule);
  for (const auto& mac : m.macros) best = std::max(best, nesting(mac.body));
  return best;
}

} // namespace asmf
