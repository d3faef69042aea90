#include <benchmark/benchmark.h>

#include <string>

#include "mergelens/ingest.hpp"
#include "mergelens/synth.hpp"

using namespace mergelens;

namespace {

// Concatenates synthetic scenes with disjoint vehicle ids into one table.
std::string corpus_csv(std::size_t scenes) {
  std::string out;
  std::int64_t offset = 0;
  for (auto& s : generate_corpus(scenes, 11)) {
    Dataset ds = s.dataset;
    TrackMap shifted;
    for (auto& [id, segs] : ds.tracks) {
      const VehicleId nid{to_int(id) + offset};
      for (auto& seg : segs) seg.vehicle_id = nid;
      shifted[nid] = segs;
    }
    offset += 1000;
    ds.tracks = std::move(shifted);
    auto csv = dataset_to_csv(ds);
    if (!out.empty()) csv.erase(0, csv.find('\n') + 1);
    out += csv;
  }
  return out;
}

void BM_ParseDataset(benchmark::State& state) {
  const auto csv = corpus_csv(static_cast<std::size_t>(state.range(0)));
  const RoadConfig road = synthetic_road();
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n';
  for (auto _ : state) {
    auto ds = parse_dataset(csv, ColumnMap{}, road);
    benchmark::DoNotOptimize(ds);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * csv.size()));
  state.counters["rows/s"] = benchmark::Counter(static_cast<double>(rows * state.iterations()),
                                                benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ParseDataset)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
