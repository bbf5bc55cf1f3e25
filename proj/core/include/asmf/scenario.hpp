#pragma once

#include <string>
#include <vector>

#include "asmf/diag.hpp"
#include "asmf/interp.hpp"
#include "asmf/typecheck.hpp"

namespace asmf {

// A scripted run: set monitored inputs, advance, and compare locations
// against expected values. Line-oriented source, one command per line:
//   set <fn>(<args>) := <value>;
//   step;
//   check <fn>(<args>) = <value>;
// Set values persist across steps until overwritten.
struct ScenarioCommand {
  enum class Kind { Set, Step, Check };
  Kind kind = Kind::Step;
  std::string fn;
  std::vector<Value> args;
  Value value;
  int line = 0;
};

struct Scenario {
  std::vector<ScenarioCommand> commands;
};

struct ScenarioParseResult {
  Scenario scenario;
  std::vector<Diagnostic> errors;
  bool ok() const { return errors.empty(); }
};

ScenarioParseResult parse_scenario(const std::string& source);

struct CheckOutcome {
  int line = 0;
  std::string location; // printed location
  Value expected;
  Value actual;
  bool passed = false;
  std::string message; // fault description when evaluation failed
};

struct ScenarioReport {
  std::vector<CheckOutcome> checks;
  // Runner errors: unknown locations, values outside the declared domain,
  // monitored locations read by a step without a set value, runs that stop
  // on a fault mid-script.
  std::vector<std::string> errors;

  bool passed() const {
    if (!errors.empty()) return false;
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  std::string summary() const; // one line per check/error plus a verdict
};

// Executes the scenario from the initial state. All checks are reported;
// execution stops only when a step faults.
ScenarioReport run_scenario(const TypedModel& tm, const Scenario& s, const ExecOptions& opts = {});

} // namespace asmf
