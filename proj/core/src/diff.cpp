#include "asmf/diff.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include "asmf/flatten.hpp"
#include "asmf/printer.hpp"
#include "json.hpp"

namespace asmf {

namespace {

const char* policy_name(ChoicePolicy p) {
  return p == ChoicePolicy::FirstInOrder ? "first-in-order" : "seeded-random";
}

} // namespace

std::string DiffReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = equivalent ? "equivalent" : "diverged";
  j["policy"] = policy_name(policy);
  j["seed"] = seed;
  j["input_seed"] = input_seed;
  j["steps"] = steps;
  if (divergence) {
    j["divergence"] = {{"step", divergence->step},
                       {"location", divergence->location},
                       {"in_original", divergence->in_original},
                       {"in_flattened", divergence->in_flattened}};
  }
  return j.dump(2);
}

DiffReport diff_trace(const TypedModel& original, const TypedModel& flattened,
                      const std::vector<MonitoredInputs>& inputs, const ExecOptions& opts) {
  DiffReport rep;
  rep.policy = opts.policy;
  rep.seed = opts.seed;
  rep.steps = static_cast<int64_t>(inputs.size());

  Trace a = run(original, inputs, opts);
  Trace b = run(flattened, inputs, opts);

  size_t n = std::min(a.states.size(), b.states.size());
  for (size_t i = 0; i < n && !rep.divergence; ++i) {
    auto ia = a.states[i].begin(), ea = a.states[i].end();
    auto ib = b.states[i].begin(), eb = b.states[i].end();
    while (ia != ea || ib != eb) {
      // both states are sorted maps over the same controlled signature;
      // key mismatches are reported as an absent side, not skipped
      if (ib == eb || (ia != ea && ia->first < ib->first)) {
        rep.divergence = {static_cast<int64_t>(i), ia->first.str(), ia->second.str(), "absent"};
        break;
      }
      if (ia == ea || ib->first < ia->first) {
        rep.divergence = {static_cast<int64_t>(i), ib->first.str(), "absent", ib->second.str()};
        break;
      }
      if (ia->second != ib->second) {
        rep.divergence = {static_cast<int64_t>(i), ia->first.str(), ia->second.str(),
                          ib->second.str()};
        break;
      }
      ++ia, ++ib;
    }
  }
  if (!rep.divergence && a.final_status != b.final_status)
    rep.divergence = {static_cast<int64_t>(n) - 1, "status", step_status_name(a.final_status),
                      step_status_name(b.final_status)};
  if (!rep.divergence && a.states.size() != b.states.size())
    rep.divergence = {static_cast<int64_t>(n) - 1, "states", std::to_string(a.states.size()),
                      std::to_string(b.states.size())};
  rep.equivalent = !rep.divergence.has_value();
  return rep;
}

std::vector<MonitoredInputs> random_inputs(const TypedModel& tm, int64_t steps,
                                           uint64_t input_seed) {
  std::vector<Location> locs = tm.locations_of_kind(FunctionKind::Monitored);
  std::mt19937_64 eng(input_seed);
  std::vector<MonitoredInputs> out;
  out.reserve(static_cast<size_t>(steps));
  for (int64_t s = 0; s < steps; ++s) {
    MonitoredInputs step;
    for (const auto& loc : locs) {
      // every monitored location gets a value from its domain each step; the
      // lowered form is only required to agree on fully supplied environments
      std::vector<Value> vals = enumerate_domain(tm.result_domain(*tm.decl(loc.fn)));
      step[loc] = vals[eng() % vals.size()];
    }
    out.push_back(std::move(step));
  }
  return out;
}

DiffReport diff_random(const TypedModel& original, int64_t steps, uint64_t input_seed,
                       const ExecOptions& opts) {
  FlattenResult fr = flatten_pipeline(original);
  CheckResult cf = check(fr.model);
  // flatten_pipeline re-checks after every pass, so this cannot fail
  std::vector<MonitoredInputs> inputs = random_inputs(original, steps, input_seed);
  DiffReport rep = diff_trace(original, *cf.typed, inputs, opts);
  rep.input_seed = input_seed;
  return rep;
}

namespace {

// A candidate is interesting when it still diverges after lowering — or when
// the lowering itself breaks on it.
bool still_diverges(const Model& cand, const std::vector<MonitoredInputs>& inputs,
                    const ExecOptions& opts) {
  CheckResult cr = check(cand);
  if (!cr.ok()) return false;
  try {
    FlattenResult fr = flatten_pipeline(*cr.typed);
    CheckResult cf = check(fr.model);
    if (!cf.ok()) return true;
    return !diff_trace(*cr.typed, *cf.typed, inputs, opts).equivalent;
  } catch (const FlattenError&) {
    return true;
  }
}

} // namespace

Model shrink_divergence(const Model& original, const std::vector<MonitoredInputs>& inputs,
                        const ExecOptions& opts) {
  Model best = original;
  bool progress = true;
  while (progress) {
    progress = false;
    std::vector<Model> candidates;
    if (best.main_rule) {
      if (const auto* par = std::get_if<Par>(&best.main_rule->node)) {
        for (size_t i = 0; i < par->children.size(); ++i) {
          Model c = best;
          std::vector<RulePtr> rest = par->children;
          rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
          c.main_rule = r_par(std::move(rest));
          candidates.push_back(std::move(c));
        }
      }
    }
    for (size_t j = 0; j < best.macros.size(); ++j) {
      Model c = best;
      c.macros.erase(c.macros.begin() + static_cast<std::ptrdiff_t>(j));
      candidates.push_back(std::move(c));
    }
    for (auto& c : candidates) {
      if (still_diverges(c, inputs, opts)) {
        best = std::move(c);
        progress = true;
        break;
      }
    }
  }
  return best;
}

FuzzResult fuzz_campaign(const GenConfig& config, int64_t runs, int threads, int64_t steps,
                         const ExecOptions& opts) {
  threads = std::max(1, threads);
  if (runs < threads) threads = std::max<int64_t>(1, runs);

  std::vector<std::vector<FuzzFailure>> failures(static_cast<size_t>(threads));
  std::vector<int64_t> ok(static_cast<size_t>(threads), 0);

  auto worker = [&](int w) {
    for (int64_t r = w; r < runs; r += threads) {
      uint64_t model_seed = config.seed + static_cast<uint64_t>(r);
      GenConfig c = config;
      c.seed = model_seed;
      Model m = gen_model(c);
      CheckResult cr = check(m);
      if (!cr.ok()) {
        FuzzFailure f;
        f.model_seed = model_seed;
        f.error = "generated model fails checking: " + cr.errors.front().str();
        f.model_source = print_model(m);
        failures[static_cast<size_t>(w)].push_back(std::move(f));
        continue;
      }
      uint64_t input_seed = model_seed ^ 0x9e3779b97f4a7c15ull;
      ExecOptions run_opts = opts;
      // under seeded choices, every model gets its own draw sequence
      if (run_opts.policy == ChoicePolicy::SeededRandom) run_opts.seed = opts.seed ^ model_seed;
      DiffReport rep;
      try {
        rep = diff_random(*cr.typed, steps, input_seed, run_opts);
        rep.seed = run_opts.seed;
      } catch (const FlattenError& e) {
        FuzzFailure f;
        f.model_seed = model_seed;
        f.error = e.what();
        f.model_source = print_model(m);
        failures[static_cast<size_t>(w)].push_back(std::move(f));
        continue;
      }
      if (rep.equivalent) {
        ++ok[static_cast<size_t>(w)];
        continue;
      }
      FuzzFailure f;
      f.model_seed = model_seed;
      f.report = rep;
      Model small =
          shrink_divergence(m, random_inputs(*cr.typed, steps, input_seed), run_opts);
      f.model_source = print_model(small);
      failures[static_cast<size_t>(w)].push_back(std::move(f));
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();

  FuzzResult result;
  result.runs = runs;
  for (int w = 0; w < threads; ++w) {
    result.equivalent += ok[static_cast<size_t>(w)];
    for (auto& f : failures[static_cast<size_t>(w)]) result.failures.push_back(std::move(f));
  }
  std::sort(result.failures.begin(), result.failures.end(),
            [](const FuzzFailure& a, const FuzzFailure& b) { return a.model_seed < b.model_seed; });
  return result;
}

} // namespace asmf
