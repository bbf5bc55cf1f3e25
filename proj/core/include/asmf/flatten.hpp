#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "asmf/subst.hpp"
#include "asmf/typecheck.hpp"

namespace asmf {

struct FlattenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The nine passes, in canonical order. The first seven restructure rules;
// TS/RS are simplifiers run to fixpoint after each of them.
//   MCR  inline macro calls and program dispatch
//   FR   expand forall over its (finite) binder domains
//   ChR  replace choose rules by derived selection functions
//   AR   lift dynamic location arguments into lets
//   LR   expand lets over the inferred value domains
//   CaR  expand switch/case into guarded conditionals
//   NR   normalize nesting into a flat guarded-update form
//   TS   fold constant subterms (fixed rewrite list + static application folding)
//   RS   drop inert rules (fixed rewrite list)
inline const std::vector<std::string> kMainPasses = {"MCR", "FR", "ChR", "AR",
                                                     "LR",  "CaR", "NR"};
inline const std::vector<std::string> kAllPasses = {"MCR", "FR", "ChR", "AR", "LR",
                                                    "CaR", "NR", "TS",  "RS"};

struct PassStats {
  // Transformation counts per pass. NR records the change in nesting depth,
  // which can be negative (wrapping a flat rule adds a level).
  std::map<std::string, int64_t> counts;
  std::map<std::string, double> seconds;

  int64_t count(const std::string& pass) const {
    auto it = counts.find(pass);
    return it == counts.end() ? 0 : it->second;
  }
  double total_seconds() const;
  std::string table() const;
  std::string csv() const; // header MCR,FR,ChR,AR,LR,CaR,NR,TS,RS,Time + one row
};

struct PassOutcome {
  Model model;
  int64_t count = 0;
};

// Individual passes. Each consumes a checked model and produces a model that
// checks again.
PassOutcome pass_mcr(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_fr(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_chr(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_ar(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_lr(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_car(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_nr(const TypedModel& tm, FreshNames& fresh);
PassOutcome pass_ts(const TypedModel& tm); // one fixpoint run
PassOutcome pass_rs(const TypedModel& tm); // one fixpoint run

struct FlattenResult {
  Model model;
  PassStats stats;
};

// Runs the passes in order (canonical when `passes` is empty), with TS and RS
// to fixpoint after each restructuring pass; explicit "TS"/"RS" entries run a
// single fixpoint at that point. The model is re-checked after every pass;
// a check failure is an internal error and throws FlattenError. AR must not
// come after LR.
FlattenResult flatten_pipeline(const TypedModel& tm, const std::vector<std::string>& passes = {});

} // namespace asmf
