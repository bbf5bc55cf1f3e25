#include <benchmark/benchmark.h>

#include <stdexcept>
#include <string>

#include "asmf/diff.hpp"
#include "asmf/flatten.hpp"
#include "asmf/generate.hpp"
#include "asmf/interp.hpp"
#include "asmf/parser.hpp"
#include "asmf/typecheck.hpp"

namespace {

// Exercises every pass: macro inlining, forall and let expansion, choice
// lowering, argument lifting, case expansion, and the simplifiers.
const std::string kKitchen = R"(asm BenchKitchen

signature:
  domain Mode = {Off, Idle, Run}
  domain Level = [0 .. 3]
  controlled mode : Mode
  controlled level : Level
  controlled mem : Level -> Boolean
  monitored button : Boolean
  monitored target : Level
  static bound : Level
  derived ready : Boolean

definitions:
  function bound = 3
  function ready = mode != Off and level < bound

  rule bump($d in Level) =
    if level < $d then level := level + 1
    else if level > $d then level := level - 1 endif endif

  rule engage =
    choose $m in Mode with $m != mode do
      mode := $m
    ifnone skip endchoose

  main rule r_main =
    par
      if button then engage[] endif
      mem(level) := button
      forall $l in Level with mem($l) do skip
      switch mode
        case Off : skip
        case Idle : if ready then bump[target] endif
        case Run : let ($t = target) in bump[$t] endlet
      endswitch
    endpar

init:
  mode = Off
  level = 0
  mem(0) = false
  mem(1) = false
  mem(2) = false
  mem(3) = false
)";

asmf::TypedModel checked(const std::string& source) {
  asmf::ParseResult pr = asmf::parse_model(source);
  if (!pr.ok()) throw std::runtime_error("benchmark model does not parse");
  asmf::CheckResult cr = asmf::check(pr.model);
  if (!cr.ok()) throw std::runtime_error("benchmark model does not check: " + cr.errors.front().str());
  return std::move(*cr.typed);
}

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) {
    asmf::ParseResult pr = asmf::parse_model(kKitchen);
    benchmark::DoNotOptimize(pr);
  }
}
BENCHMARK(BM_Parse);

void BM_Check(benchmark::State& state) {
  asmf::ParseResult pr = asmf::parse_model(kKitchen);
  for (auto _ : state) {
    asmf::CheckResult cr = asmf::check(pr.model);
    benchmark::DoNotOptimize(cr);
  }
}
BENCHMARK(BM_Check);

void BM_Flatten(benchmark::State& state) {
  asmf::TypedModel tm = checked(kKitchen);
  for (auto _ : state) {
    asmf::FlattenResult fr = asmf::flatten_pipeline(tm);
    benchmark::DoNotOptimize(fr);
  }
}
BENCHMARK(BM_Flatten);

// One interpreter step of the original and of the lowered form, to show the
// execution cost the normal form trades for its shape.
void BM_StepOriginal(benchmark::State& state) {
  asmf::TypedModel tm = checked(kKitchen);
  std::vector<asmf::MonitoredInputs> inputs = asmf::random_inputs(tm, 1, 7);
  for (auto _ : state) {
    asmf::Executor ex(tm);
    asmf::StepResult r = ex.step(inputs[0]);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_StepOriginal);

void BM_StepFlattened(benchmark::State& state) {
  asmf::TypedModel tm = checked(kKitchen);
  asmf::FlattenResult fr = asmf::flatten_pipeline(tm);
  asmf::CheckResult cr = asmf::check(fr.model);
  std::vector<asmf::MonitoredInputs> inputs = asmf::random_inputs(tm, 1, 7);
  for (auto _ : state) {
    asmf::Executor ex(*cr.typed);
    asmf::StepResult r = ex.step(inputs[0]);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_StepFlattened);

// Whole pipeline over generated models of growing rule depth.
void BM_FlattenGenerated(benchmark::State& state) {
  asmf::GenConfig cfg;
  cfg.seed = 11;
  cfg.max_depth = static_cast<int>(state.range(0));
  asmf::Model m = asmf::gen_model(cfg);
  asmf::CheckResult cr = asmf::check(m);
  if (!cr.ok()) throw std::runtime_error("generated model does not check");
  for (auto _ : state) {
    asmf::FlattenResult fr = asmf::flatten_pipeline(*cr.typed);
    benchmark::DoNotOptimize(fr);
  }
}
BENCHMARK(BM_FlattenGenerated)->Arg(2)->Arg(3)->Arg(4);

} // namespace

BENCHMARK_MAIN();
