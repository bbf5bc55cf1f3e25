#include "asmf/normal_form.hpp"

namespace asmf {

namespace {

struct Checker {
  std::vector<std::string> violations;

  void bad(const std::string& path, const std::string& why) {
    violations.push_back(path + ": " + why);
  }

  // then-branch payload: an Update, or a Par whose children are all Updates
  void check_cond_body(const RulePtr& r, const std::string& path) {
    if (!r) {
      bad(path, "missing branch");
      return;
    }
    if (rule_kind(r) == RuleKind::Update) return;
    if (rule_kind(r) == RuleKind::Par) {
      const auto& p = std::get<Par>(r->node);
      for (size_t i = 0; i < p.children.size(); ++i) {
        if (rule_kind(p.children[i]) != RuleKind::Update)
          bad(path + ".par[" + std::to_string(i) + "]", "expected an update");
      }
      return;
    }
    bad(path, "expected an update or a block of updates");
  }

  void check_cond(const Cond& c, const std::string& path) {
    if (c.else_rule) bad(path + ".else", "else branch present");
    check_cond_body(c.then_rule, path + ".then");
  }

  void check_top_child(const RulePtr& r, const std::string& path) {
    if (!r) {
      bad(path, "missing rule");
      return;
    }
    switch (rule_kind(r)) {
      case RuleKind::Update:
        return;
      case RuleKind::Cond:
        check_cond(std::get<Cond>(r->node), path + ".cond");
        return;
      default:
        bad(path, "expected an update or a conditional");
        return;
    }
  }

  void check_main(const RulePtr& r) {
    if (!r) {
      bad("main", "missing rule");
      return;
    }
    if (rule_kind(r) == RuleKind::Par) {
      const auto& p = std::get<Par>(r->node);
      for (size_t i = 0; i < p.children.size(); ++i)
        check_top_child(p.children[i], "main.par[" + std::to_string(i) + "]");
      return;
    }
    // a lone update or conditional is accepted as a one-child block
    check_top_child(r, "main");
  }
};

} // namespace

NormalFormReport is_normal_form(const Model& m) {
  Checker c;
  for (const auto& mac : m.macros) c.bad("macro " + mac.name, "macro still declared");
  for (const auto& prog : m.programs)
    c.bad("program " + prog.agent_set, "agent program binding still declared");
  c.check_main(m.main_rule);
  NormalFormReport report;
  report.normal = c.violations.empty();
  report.violations = std::move(c.violations);
  return report;
}

} // namespace asmf
