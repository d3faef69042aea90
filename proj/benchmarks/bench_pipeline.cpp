#include <benchmark/benchmark.h>

#include "mergelens/pipeline.hpp"
#include "mergelens/predictors.hpp"
#include "mergelens/synth.hpp"

using namespace mergelens;

namespace {

std::vector<Dataset> corpus(std::size_t n) {
  CorpusRanges ranges;
  ranges.policy = CourtesyPolicy::kCourtesyInConflict;
  ranges.courtesy_probability = 0.5;
  std::vector<Dataset> out;
  for (auto& s : generate_corpus(n, 99, ranges)) out.push_back(std::move(s.dataset));
  return out;
}

void BM_Analyze(benchmark::State& state) {
  const auto ds = corpus(200);
  AnalysisConfig cfg;
  cfg.jobs = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(analyze(ds, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_Analyze)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_CompareConstantVelocity(benchmark::State& state) {
  const auto ds = corpus(50);
  AnalysisConfig cfg;
  cfg.jobs = static_cast<unsigned>(state.range(0));
  const auto res = analyze(ds, cfg);
  const auto source = make_baseline_source(BaselineKind::kConstantVelocity);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_predictor(ds, res.events, *source, cfg, PredictionConfig{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(res.events.size()));
}
BENCHMARK(BM_CompareConstantVelocity)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
