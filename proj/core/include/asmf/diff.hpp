#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asmf/generate.hpp"
#include "asmf/interp.hpp"
#include "asmf/typecheck.hpp"

namespace asmf {

// First point where the two runs disagree. `location` is a printed controlled
// location, or "status" when the runs end differently.
struct Divergence {
  int64_t step = 0;
  std::string location;
  std::string in_original;
  std::string in_flattened;
};

struct DiffReport {
  bool equivalent = true;
  std::optional<Divergence> divergence;
  ChoicePolicy policy = ChoicePolicy::FirstInOrder;
  uint64_t seed = 0;       // executor seed, shared by both runs
  uint64_t input_seed = 0; // seed the monitored inputs were drawn from
  int64_t steps = 0;

  // Stable field names: verdict, policy, seed, input_seed, steps, divergence
  // {step, location, in_original, in_flattened}.
  std::string to_json() const;
};

// Lockstep run of both models on the same inputs under the same options;
// compares controlled locations state by state, then the terminal status.
// Functions introduced by lowering are derived, so they never enter the
// comparison: states hold controlled locations only.
DiffReport diff_trace(const TypedModel& original, const TypedModel& flattened,
                      const std::vector<MonitoredInputs>& inputs, const ExecOptions& opts = {});

// Per step, one uniform draw per monitored location from its result domain,
// from a dedicated engine seeded with input_seed. Every monitored location is
// set every step: equivalence is only claimed on fully supplied environments.
std::vector<MonitoredInputs> random_inputs(const TypedModel& tm, int64_t steps,
                                           uint64_t input_seed);

// Lowers `original` through the full pipeline and diff-tests it against the
// result on random inputs.
DiffReport diff_random(const TypedModel& original, int64_t steps, uint64_t input_seed,
                       const ExecOptions& opts = {});

// Smallest still-diverging model reachable by repeatedly deleting top-level
// parallel children and macro declarations (candidates must typecheck).
Model shrink_divergence(const Model& original, const std::vector<MonitoredInputs>& inputs,
                        const ExecOptions& opts = {});

struct FuzzFailure {
  uint64_t model_seed = 0;
  DiffReport report;
  std::string model_source; // printed shrunk model
  std::string error;        // pipeline/check failure, when the lowering itself broke
};

struct FuzzResult {
  int64_t runs = 0;
  int64_t equivalent = 0;
  std::vector<FuzzFailure> failures;
};

// Generates `runs` models (seeds config.seed, config.seed+1, ...), lowers
// each and diff-tests original vs lowered on random inputs, fanned out over
// `threads` workers. Workers own their models and RNG streams; results merge
// into one collector after all workers join. Diverging models are shrunk.
FuzzResult fuzz_campaign(const GenConfig& config, int64_t runs, int threads, int64_t steps,
                         const ExecOptions& opts = {});

} // namespace asmf
