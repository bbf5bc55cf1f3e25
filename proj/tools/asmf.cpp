#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "asmf/diff.hpp"
#include "asmf/flatten.hpp"
#include "asmf/generate.hpp"
#include "asmf/interp.hpp"
#include "asmf/metrics.hpp"
#include "asmf/normal_form.hpp"
#include "asmf/parser.hpp"
#include "asmf/printer.hpp"
#include "asmf/scenario.hpp"
#include "asmf/typecheck.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1; // validation / diff / scenario failure
constexpr int kExitBadModel = 2; // parse or type error in an input
constexpr int kExitUsage = 3;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

void print_diagnostics(const std::string& path, const std::vector<asmf::Diagnostic>& ds) {
  for (const auto& d : ds) std::cerr << path << ":" << d.str() << "\n";
}

// Parses and checks a model file; diagnostics go to stderr.
std::optional<asmf::TypedModel> load_model(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "cannot read " << path << "\n";
    return std::nullopt;
  }
  asmf::ParseResult pr = asmf::parse_model(*text);
  if (!pr.ok()) {
    print_diagnostics(path, pr.errors);
    return std::nullopt;
  }
  asmf::CheckResult cr = asmf::check(pr.model);
  if (!cr.ok()) {
    print_diagnostics(path, cr.errors);
    return std::nullopt;
  }
  return std::move(*cr.typed);
}

uint64_t env_seed() {
  if (const char* s = std::getenv("ASMF_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
      std::cerr << "ignoring unparsable ASMF_SEED\n";
    }
  }
  return 0;
}

std::vector<std::string> split_passes(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct PolicyFlags {
  bool deterministic = false;
  std::optional<uint64_t> seed;

  asmf::ExecOptions exec_options() const {
    asmf::ExecOptions opts;
    if (seed && !deterministic) {
      opts.policy = asmf::ChoicePolicy::SeededRandom;
      opts.seed = *seed;
    }
    return opts;
  }
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& pf) {
  auto* det = cmd->add_flag("--deterministic", pf.deterministic,
                            "always take the first choice candidate (default)");
  cmd->add_option("--seed", pf.seed, "draw choices from a seeded engine")->excludes(det);
}

int cmd_flatten(const std::string& in, const std::string& out, const std::string& passes_csv,
                bool show_stats, const std::string& csv_path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!out.empty() && fs::weakly_canonical(in, ec) == fs::weakly_canonical(out, ec)) {
    std::cerr << "refusing to overwrite the input file " << in << "\n";
    return kExitUsage;
  }

  std::vector<std::string> passes = split_passes(passes_csv);
  for (const auto& p : passes) {
    if (std::find(asmf::kAllPasses.begin(), asmf::kAllPasses.end(), p) ==
        asmf::kAllPasses.end()) {
      std::cerr << "unknown pass '" << p << "'\n";
      return kExitUsage;
    }
  }
  auto ar = std::find(passes.begin(), passes.end(), "AR");
  auto lr = std::find(passes.begin(), passes.end(), "LR");
  if (ar != passes.end() && lr != passes.end() && lr < ar) {
    std::cerr << "AR must run before LR\n";
    return kExitUsage;
  }

  auto tm = load_model(in);
  if (!tm) return kExitBadModel;

  asmf::FlattenResult result;
  try {
    result = asmf::flatten_pipeline(*tm, passes);
  } catch (const asmf::FlattenError& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  }

  // syntactic validation: the printed output must reparse to the same model
  std::string printed = asmf::print_model(result.model);
  asmf::ParseResult back = asmf::parse_model(printed, {.allow_reserved_names = true});
  if (!back.ok() || !asmf::model_equal(back.model, result.model)) {
    std::cerr << "internal error: flattened output does not reparse to itself\n";
    print_diagnostics("<output>", back.errors);
    return kExitFailure;
  }

  if (!out.empty() && !write_file(out, printed)) {
    std::cerr << "cannot write " << out << "\n";
    return kExitFailure;
  }
  if (out.empty()) std::cout << printed;
  if (show_stats) std::cout << result.stats.table();
  if (!csv_path.empty() && !write_file(csv_path, result.stats.csv())) {
    std::cerr << "cannot write " << csv_path << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

// Inputs files reuse the scenario syntax restricted to `set` and `step`.
int parse_inputs_file(const std::string& path, std::vector<asmf::MonitoredInputs>& out) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "cannot read " << path << "\n";
    return kExitBadModel;
  }
  asmf::ScenarioParseResult pr = asmf::parse_scenario(*text);
  if (!pr.ok()) {
    print_diagnostics(path, pr.errors);
    return kExitBadModel;
  }
  asmf::MonitoredInputs current;
  for (const auto& cmd : pr.scenario.commands) {
    switch (cmd.kind) {
      case asmf::ScenarioCommand::Kind::Set:
        current[{cmd.fn, cmd.args}] = cmd.value;
        break;
      case asmf::ScenarioCommand::Kind::Step:
        out.push_back(current);
        break;
      case asmf::ScenarioCommand::Kind::Check:
        std::cerr << path << ":" << cmd.line << ": check commands belong in scenarios\n";
        return kExitBadModel;
    }
  }
  return kExitOk;
}

int cmd_simulate(const std::string& in, int64_t steps, const PolicyFlags& pf,
                 const std::string& inputs_path) {
  auto tm = load_model(in);
  if (!tm) return kExitBadModel;

  std::vector<asmf::MonitoredInputs> inputs;
  if (!inputs_path.empty()) {
    if (int rc = parse_inputs_file(inputs_path, inputs); rc != kExitOk) return rc;
    if (steps > 0) {
      // explicit --steps wins: truncate, or pad by repeating the last settings
      asmf::MonitoredInputs last = inputs.empty() ? asmf::MonitoredInputs{} : inputs.back();
      inputs.resize(static_cast<size_t>(steps), last);
    }
  } else {
    // no inputs file: draw every monitored location from its domain each
    // step, so the run never reads an unset input
    inputs = asmf::random_inputs(*tm, steps, pf.seed.value_or(0));
  }

  asmf::Trace tr = asmf::run(*tm, inputs, pf.exec_options());
  std::cout << tr.serialize();
  return tr.final_status == asmf::StepStatus::Completed ? kExitOk : kExitFailure;
}

int cmd_scenario(const std::string& in, const std::string& scen_path, const PolicyFlags& pf) {
  auto tm = load_model(in);
  if (!tm) return kExitBadModel;
  auto text = read_file(scen_path);
  if (!text) {
    std::cerr << "cannot read " << scen_path << "\n";
    return kExitBadModel;
  }
  asmf::ScenarioParseResult pr = asmf::parse_scenario(*text);
  if (!pr.ok()) {
    print_diagnostics(scen_path, pr.errors);
    return kExitBadModel;
  }
  asmf::ScenarioReport report = asmf::run_scenario(*tm, pr.scenario, pf.exec_options());
  std::cout << report.summary();
  return report.passed() ? kExitOk : kExitFailure;
}

int cmd_diff(const std::string& in, int64_t runs, int64_t steps, uint64_t seed,
             const std::string& policy) {
  auto tm = load_model(in);
  if (!tm) return kExitBadModel;

  asmf::FlattenResult fr;
  try {
    fr = asmf::flatten_pipeline(*tm);
  } catch (const asmf::FlattenError& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  }
  asmf::CheckResult cf = asmf::check(fr.model);
  if (!cf.ok()) {
    std::cerr << "internal error: lowered model fails checking\n";
    return kExitFailure;
  }

  asmf::ExecOptions opts;
  if (policy == "seeded") opts.policy = asmf::ChoicePolicy::SeededRandom;
  for (int64_t r = 0; r < runs; ++r) {
    opts.seed = seed + static_cast<uint64_t>(r);
    std::vector<asmf::MonitoredInputs> inputs =
        asmf::random_inputs(*tm, steps, seed + static_cast<uint64_t>(r));
    asmf::DiffReport rep = asmf::diff_trace(*tm, *cf.typed, inputs, opts);
    rep.input_seed = seed + static_cast<uint64_t>(r);
    if (!rep.equivalent) {
      std::cout << rep.to_json() << "\n";
      return kExitFailure;
    }
  }
  std::cout << runs << "/" << runs << " equivalent\n";
  return kExitOk;
}

int cmd_fuzz(int64_t runs, uint64_t seed, int threads, int64_t steps, int depth, int max_macros,
             int64_t max_card, const std::string& policy) {
  asmf::GenConfig cfg;
  cfg.seed = seed;
  cfg.max_depth = depth;
  cfg.max_macros = max_macros;
  cfg.max_domain_card = max_card;

  asmf::ExecOptions opts;
  if (policy == "seeded") {
    opts.policy = asmf::ChoicePolicy::SeededRandom;
    opts.seed = seed;
  }
  asmf::FuzzResult result = asmf::fuzz_campaign(cfg, runs, threads, steps, opts);
  std::cout << "equivalent " << result.equivalent << "/" << result.runs << "\n";
  size_t diverged = 0, errored = 0;
  for (const auto& f : result.failures) (f.error.empty() ? diverged : errored)++;
  if (!result.failures.empty())
    std::cout << diverged << " divergence(s), " << errored
              << " model(s) not processed (limits or internal errors)\n";
  for (const auto& f : result.failures) {
    std::cout << "seed " << f.model_seed << ":\n";
    if (!f.error.empty())
      std::cout << f.error << "\n";
    else
      std::cout << f.report.to_json() << "\n";
    std::cout << f.model_source;
  }
  return result.failures.empty() ? kExitOk : kExitFailure;
}

int cmd_stats(const std::string& in, const std::string& csv_path) {
  auto tm = load_model(in);
  if (!tm) return kExitBadModel;

  asmf::RuleHistogram before = asmf::count_rules(tm->model);
  asmf::FlattenResult result;
  try {
    result = asmf::flatten_pipeline(*tm);
  } catch (const asmf::FlattenError& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  }
  asmf::RuleHistogram after = asmf::count_rules(result.model);
  asmf::NormalFormReport nf = asmf::is_normal_form(result.model);

  std::cout << "rules before: " << before.total() << "\n";
  std::cout << "rules after:  " << after.total() << "\n";
  std::cout << "growth:       " << asmf::delta_percent(after.total(), before.total()) << "%\n";
  std::cout << "nesting:      " << asmf::max_nesting(tm->model) << " -> "
            << asmf::max_nesting(result.model) << "\n";
  std::cout << "normal form:  " << (nf.normal ? "yes" : "no") << "\n";
  std::cout << result.stats.table();
  if (!csv_path.empty() && !write_file(csv_path, result.stats.csv())) {
    std::cerr << "cannot write " << csv_path << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-state machine model flattener and validator"};
  app.require_subcommand(1);

  // flatten
  std::string fl_in, fl_out, fl_passes, fl_csv;
  bool fl_stats = false;
  auto* fl = app.add_subcommand("flatten", "lower a model to normal form");
  fl->add_option("input", fl_in, "model file")->required();
  fl->add_option("-o,--output", fl_out, "output file (stdout if omitted)");
  fl->add_option("--passes", fl_passes, "comma-separated pass list (default: all)");
  fl->add_flag("--stats", fl_stats, "print the pass application table");
  fl->add_option("--csv", fl_csv, "write pass statistics as CSV");

  // simulate
  std::string sim_in, sim_inputs;
  int64_t sim_steps = 0;
  PolicyFlags sim_pf;
  auto* sim = app.add_subcommand("simulate", "run a model and print its trace");
  sim->add_option("input", sim_in, "model file")->required();
  sim->add_option("--steps", sim_steps, "number of steps (default: one per step in --inputs)");
  sim->add_option("--inputs", sim_inputs, "monitored inputs file (set/step commands)");
  add_policy_flags(sim, sim_pf);

  // scenario
  std::string sc_in, sc_file;
  PolicyFlags sc_pf;
  auto* sc = app.add_subcommand("scenario", "run a scripted scenario against a model");
  sc->add_option("input", sc_in, "model file")->required();
  sc->add_option("scenario", sc_file, "scenario file")->required();
  add_policy_flags(sc, sc_pf);

  // diff
  std::string df_in, df_policy = "first";
  int64_t df_runs = 100, df_steps = 20;
  std::optional<uint64_t> df_seed;
  auto* df = app.add_subcommand("diff", "compare a model against its lowered form");
  df->add_option("input", df_in, "model file")->required();
  df->add_option("--runs", df_runs, "random input sequences to try");
  df->add_option("--steps", df_steps, "steps per run");
  df->add_option("--seed", df_seed, "base seed (default: ASMF_SEED or 0)");
  df->add_option("--policy", df_policy, "choice policy: first or seeded")
      ->check(CLI::IsMember({"first", "seeded"}));

  // fuzz
  int64_t fz_runs = 1000, fz_steps = 10, fz_card = 4;
  std::optional<uint64_t> fz_seed;
  int fz_threads = static_cast<int>(std::thread::hardware_concurrency());
  int fz_depth = 4, fz_macros = 3;
  auto* fz = app.add_subcommand("fuzz", "diff-test randomly generated models");
  fz->add_option("--runs", fz_runs, "number of generated models");
  fz->add_option("--seed", fz_seed, "base seed (default: ASMF_SEED or 0)");
  fz->add_option("--threads", fz_threads, "worker threads");
  fz->add_option("--steps", fz_steps, "steps per diff run");
  fz->add_option("--depth", fz_depth, "max rule nesting depth");
  fz->add_option("--max-macros", fz_macros, "max macro declarations");
  fz->add_option("--max-card", fz_card, "max domain cardinality");
  std::string fz_policy = "first";
  fz->add_option("--policy", fz_policy, "choice policy: first or seeded")
      ->check(CLI::IsMember({"first", "seeded"}));

  // stats
  std::string st_in, st_csv;
  auto* st = app.add_subcommand("stats", "lower a model and report size metrics");
  st->add_option("input", st_in, "model file")->required();
  st->add_option("--csv", st_csv, "write pass statistics as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (fl->parsed()) return cmd_flatten(fl_in, fl_out, fl_passes, fl_stats, fl_csv);
  if (sim->parsed()) return cmd_simulate(sim_in, sim_steps, sim_pf, sim_inputs);
  if (sc->parsed()) return cmd_scenario(sc_in, sc_file, sc_pf);
  if (df->parsed()) return cmd_diff(df_in, df_runs, df_steps, df_seed.value_or(env_seed()), df_policy);
  if (fz->parsed())
    return cmd_fuzz(fz_runs, fz_seed.value_or(env_seed()), fz_threads, fz_steps, fz_depth,
                    fz_macros, fz_card, fz_policy);
  if (st->parsed()) return cmd_stats(st_in, st_csv);
  return kExitUsage;
}
