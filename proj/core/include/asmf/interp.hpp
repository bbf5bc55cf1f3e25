#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "asmf/typecheck.hpp"

namespace asmf {

// How a choice point (choose rule / selection term) picks among the
// satisfying candidates. FirstInOrder takes the first in enumeration order;
// SeededRandom draws once per choice point from a single per-run engine.
enum class ChoicePolicy { FirstInOrder, SeededRandom };

struct ExecOptions {
  ChoicePolicy policy = ChoicePolicy::FirstInOrder;
  uint64_t seed = 0;
};

// Why a step (or run) stopped.
enum class StepStatus {
  Completed,
  InconsistentUpdate,  // two updates to one location with different values
  InvariantViolation,
  UndefinedGuard,      // undef reached a position that needs a defined value
  OutOfDomain,         // a defined value outside the declared domain
};
const char* step_status_name(StepStatus s);

// Monitored inputs for one step, by location. Missing locations read undef.
using MonitoredInputs = std::map<Location, Value>;

// Thrown inside evaluation; callers outside the executor see it only via
// eval_term_in_state.
struct EvalFault {
  StepStatus status;
  std::string message;
};

struct StepResult {
  StepStatus status = StepStatus::Completed;
  std::string message;
  std::map<Location, Value> updates; // the consistent update set (Completed only)
};

class Executor {
 public:
  Executor(const TypedModel& tm, const ExecOptions& opts = {});

  const std::map<Location, Value>& state() const { return controlled_; }
  void set_state(std::map<Location, Value> s) { controlled_ = std::move(s); }

  // Fires the main rule once; on Completed the state has advanced.
  StepResult step(const MonitoredInputs& inputs);

  // Name of the first violated (or undefined) invariant in the current state,
  // evaluated with the given inputs; nullopt if all hold. Throws EvalFault on
  // evaluation faults other than undefinedness of the invariant itself.
  std::optional<std::string> violated_invariant(const MonitoredInputs& inputs);

  // Evaluates a closed term against the current state (scenario checks).
  // Throws EvalFault.
  Value eval_term_in_state(const TermPtr& t, const MonitoredInputs& inputs);

  // Monitored locations read since the last step() began that were absent
  // from its inputs (and so read undef).
  const std::set<Location>& monitored_misses() const { return monitored_misses_; }

 private:
  friend struct Eval;
  const TypedModel& tm_;
  ExecOptions opts_;
  std::map<Location, Value> controlled_;
  std::set<Location> monitored_misses_;
  std::mt19937_64 engine_;
  // per-step cache of derived applications: one evaluation (and hence one
  // draw) per (function, args) per step
  std::map<std::pair<std::string, std::vector<Value>>, Value> derived_memo_;
  // per-run cache for static term definitions
  std::map<std::pair<std::string, std::vector<Value>>, Value> static_memo_;
};

// The initial controlled state described by the init section (total after
// checking).
std::map<Location, Value> initial_state(const TypedModel& tm);

struct Trace {
  std::vector<std::map<Location, Value>> states; // S0 .. Sn (controlled)
  std::vector<MonitoredInputs> inputs;           // inputs consumed per step
  StepStatus final_status = StepStatus::Completed;
  std::string message;

  std::string serialize() const;
};

// Runs |inputs| steps from the initial state, stopping early on a fault.
// Invariants are checked on the initial state (against the first step's
// inputs, or none) and after every step.
Trace run(const TypedModel& tm, const std::vector<MonitoredInputs>& inputs,
          const ExecOptions& opts = {});

// Evaluates a static function on literal argument values with no state.
// nullopt when the application would fault (bad args, undefined strictness)
// — i.e. when the call cannot be folded to a definite value.
std::optional<Value> static_eval(const TypedModel& tm, const std::string& fn,
                                 const std::vector<Value>& args);

} // namespace asmf
