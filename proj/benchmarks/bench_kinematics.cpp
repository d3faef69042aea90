#include <benchmark/benchmark.h>

#include "mergelens/kinematics.hpp"
#include "mergelens/pipeline.hpp"
#include "mergelens/synth.hpp"

using namespace mergelens;

namespace {

void BM_EstimateVelocity(benchmark::State& state) {
  const auto s = generate_corpus(1, 3).front();
  const auto& track = s.dataset.tracks.at(s.truth.merger_id).front();
  double t = track.t0 + 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_velocity(track, t));
    t = t + 0.05 > track.t_end() - 1.0 ? track.t0 + 1.0 : t + 0.05;
  }
}
BENCHMARK(BM_EstimateVelocity);

void BM_LeadTimeAt(benchmark::State& state) {
  const auto corpus = generate_corpus(1, 3);
  const Dataset& ds = corpus.front().dataset;
  const auto res = analyze(std::span<const Dataset>(&ds, 1), AnalysisConfig{});
  const MergeEvent& e = res.events.front().event;
  for (auto _ : state) {
    for (double tau = 1.0; tau <= 5.0; tau += 1.0) benchmark::DoNotOptimize(lead_time_at(e, tau, ds));
  }
  state.SetItemsProcessed(state.iterations() * 5);
}
BENCHMARK(BM_LeadTimeAt);

}  // namespace
