#include "asmf/scenario.hpp"

#include <cctype>
#include <sstream>

namespace asmf {

namespace {

// Cursor over one scenario line (comments already stripped).
struct LineParser {
  const std::string& s;
  size_t pos = 0;
  int line;
  std::vector<Diagnostic>& errors;
  bool failed = false;

  void error(const std::string& msg) {
    if (!failed)
      errors.push_back({"E_SCENARIO", msg, static_cast<uint32_t>(line),
                        static_cast<uint32_t>(pos + 1)});
    failed = true;
  }

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= s.size();
  }
  bool peek_is(char c) {
    skip_ws();
    return pos < s.size() && s[pos] == c;
  }
  bool eat(char c) {
    if (!peek_is(c)) return false;
    ++pos;
    return true;
  }
  void expect(char c, const char* what) {
    if (!eat(c)) error(std::string("expected '") + c + "' " + what);
  }
  void expect_str(const std::string& kw, const char* what) {
    skip_ws();
    if (s.compare(pos, kw.size(), kw) == 0) {
      pos += kw.size();
      return;
    }
    error("expected '" + kw + "' " + what);
  }

  std::string word() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    return s.substr(start, pos - start);
  }

  std::string lower_name(const char* what) {
    skip_ws();
    if (pos >= s.size() || !std::islower(static_cast<unsigned char>(s[pos]))) {
      error(std::string("expected ") + what);
      return "";
    }
    return word();
  }

  // undef | true | false | integer | Symbol
  Value value() {
    skip_ws();
    if (pos < s.size() && (s[pos] == '-' || std::isdigit(static_cast<unsigned char>(s[pos])))) {
      size_t start = pos;
      if (s[pos] == '-') ++pos;
      size_t digits = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == digits) {
        error("expected a value");
        return Value::undef();
      }
      try {
        return Value::integer(std::stoll(s.substr(start, pos - start)));
      } catch (const std::out_of_range&) {
        error("integer literal out of range");
        return Value::undef();
      }
    }
    std::string w = word();
    if (w == "undef") return Value::undef();
    if (w == "true") return Value::boolean(true);
    if (w == "false") return Value::boolean(false);
    if (!w.empty() && std::isupper(static_cast<unsigned char>(w[0]))) return Value::symbol(w);
    error("expected a value");
    return Value::undef();
  }

  // fn or fn(v, ...)
  void location(ScenarioCommand& cmd) {
    cmd.fn = lower_name("a function name");
    if (failed) return;
    if (eat('(')) {
      if (!peek_is(')')) {
        do {
          cmd.args.push_back(value());
          if (failed) return;
        } while (eat(','));
      }
      expect(')', "after the arguments");
    }
  }
};

} // namespace

ScenarioParseResult parse_scenario(const std::string& source) {
  ScenarioParseResult out;
  std::istringstream is(source);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (auto c = raw.find("//"); c != std::string::npos) raw.resize(c);
    LineParser p{raw, 0, lineno, out.errors};
    if (p.at_end()) continue;

    ScenarioCommand cmd;
    cmd.line = lineno;
    std::string kw = p.word();
    if (kw == "step") {
      cmd.kind = ScenarioCommand::Kind::Step;
    } else if (kw == "set") {
      cmd.kind = ScenarioCommand::Kind::Set;
      p.location(cmd);
      p.expect_str(":=", "after the location");
      if (!p.failed) cmd.value = p.value();
    } else if (kw == "check") {
      cmd.kind = ScenarioCommand::Kind::Check;
      p.location(cmd);
      p.expect('=', "after the location");
      if (!p.failed) cmd.value = p.value();
    } else {
      p.error("expected 'set', 'step' or 'check'");
    }
    if (!p.failed) {
      p.expect(';', "at the end of the command");
      if (!p.at_end()) p.error("unexpected text after ';'");
    }
    if (!p.failed) out.scenario.commands.push_back(std::move(cmd));
  }
  return out;
}

namespace {

std::string loc_str(const std::string& fn, const std::vector<Value>& args) {
  return Location{fn, args}.str();
}

// A Set/Check target must name a declared function with matching arity and
// in-domain arguments. Returns false (recording the error) otherwise.
bool validate_target(const TypedModel& tm, const ScenarioCommand& cmd,
                     std::vector<std::string>& errors) {
  std::string where = "line " + std::to_string(cmd.line) + ": ";
  const FunctionDecl* decl = tm.decl(cmd.fn);
  if (!decl) {
    errors.push_back(where + "unknown function '" + cmd.fn + "'");
    return false;
  }
  std::vector<Domain> params = tm.param_domains(*decl);
  if (params.size() != cmd.args.size()) {
    errors.push_back(where + "'" + cmd.fn + "' takes " + std::to_string(params.size()) +
                     " argument(s), got " + std::to_string(cmd.args.size()));
    return false;
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].contains(cmd.args[i])) {
      errors.push_back(where + "argument " + std::to_string(i + 1) + " of " +
                       loc_str(cmd.fn, cmd.args) + " is outside " + params[i].str());
      return false;
    }
  }
  return true;
}

} // namespace

std::string ScenarioReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "pass" : "FAIL") << " line " << c.line << ": " << c.location << " = "
       << c.expected.str();
    if (!c.passed) {
      if (!c.message.empty())
        os << " (" << c.message << ")";
      else
        os << " (got " << c.actual.str() << ")";
    }
    os << "\n";
  }
  for (const auto& e : errors) os << "error: " << e << "\n";
  os << (passed() ? "scenario passed" : "scenario failed") << "\n";
  return os.str();
}

ScenarioReport run_scenario(const TypedModel& tm, const Scenario& s, const ExecOptions& opts) {
  ScenarioReport report;
  Executor ex(tm, opts);
  MonitoredInputs inputs;
  for (const auto& cmd : s.commands) {
    std::string where = "line " + std::to_string(cmd.line) + ": ";
    switch (cmd.kind) {
      case ScenarioCommand::Kind::Set: {
        if (!validate_target(tm, cmd, report.errors)) break;
        const FunctionDecl* decl = tm.decl(cmd.fn);
        if (decl->kind != FunctionKind::Monitored) {
          report.errors.push_back(where + "'" + cmd.fn + "' is not a monitored function");
          break;
        }
        Domain result = tm.result_domain(*decl);
        if (!cmd.value.is_undef() && !result.contains(cmd.value)) {
          report.errors.push_back(where + "value " + cmd.value.str() + " for " +
                                  loc_str(cmd.fn, cmd.args) + " is outside " + result.str());
          break;
        }
        inputs[{cmd.fn, cmd.args}] = cmd.value;
        break;
      }
      case ScenarioCommand::Kind::Step: {
        StepResult sr = ex.step(inputs);
        for (const auto& miss : ex.monitored_misses())
          report.errors.push_back(where + "monitored location " + miss.str() +
                                  " was read but never set before this step");
        if (sr.status != StepStatus::Completed) {
          report.errors.push_back(where + "step stopped: " +
                                  std::string(step_status_name(sr.status)) +
                                  (sr.message.empty() ? "" : " (" + sr.message + ")"));
          return report;
        }
        break;
      }
      case ScenarioCommand::Kind::Check: {
        CheckOutcome out;
        out.line = cmd.line;
        out.location = loc_str(cmd.fn, cmd.args);
        out.expected = cmd.value;
        if (!validate_target(tm, cmd, report.errors)) break;
        std::vector<TermPtr> args;
        args.reserve(cmd.args.size());
        for (const auto& a : cmd.args) args.push_back(t_value(a));
        try {
          out.actual = ex.eval_term_in_state(t_apply(cmd.fn, std::move(args)), inputs);
          out.passed = out.actual == cmd.value;
        } catch (const EvalFault& f) {
          out.passed = false;
          out.message = std::string(step_status_name(f.status)) + ": " + f.message;
        }
        report.checks.push_back(std::move(out));
        break;
      }
    }
  }
  return report;
}

} // namespace asmf
