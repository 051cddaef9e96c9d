#include <benchmark/benchmark.h>

#include "vtag/ensemble.hpp"
#include "vtag/graph.hpp"
#include "vtag/lstm.hpp"
#include "vtag/metrics.hpp"
#include "vtag/record_stream.hpp"

namespace {

using namespace vtag;

void BM_MatmulForwardBackward(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(7);
  ParamList params;
  TensorPtr a = xavier_param({n, n}, rng);
  TensorPtr b = xavier_param({n, n}, rng);
  for (auto _ : state) {
    Graph g;
    TensorPtr loss = g.mean_all(g.matmul(a, b));
    g.backward(loss);
    benchmark::DoNotOptimize(a->grad.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(32)->Arg(64)->Arg(128)->Complexity();

void BM_LstmStepBackward(benchmark::State& state) {
  int64_t cells = state.range(0);
  Rng rng(7);
  ParamList params;
  LstmCell cell("bench", LstmKind::kAccumulator, 40, cells, rng, &params);
  TensorPtr x = full({1, 40}, 0.25);
  for (auto _ : state) {
    Graph g;
    LstmState s = cell.initial_state(1);
    for (int t = 0; t < 10; ++t) s = cell.step(g, s, x);
    TensorPtr loss = g.mean_all(s.h);
    g.backward(loss);
    benchmark::DoNotOptimize(loss->values[0]);
  }
}
BENCHMARK(BM_LstmStepBackward)->Arg(16)->Arg(64);

void BM_GlobalAveragePrecision(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(11);
  PredictionMatrix preds(n, 25);
  LabelSets labels(n);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t l = 0; l < 25; ++l)
      preds.at(i, l) = static_cast<float>(rng.uniform());
    labels[i].push_back(rng.uniform_index(25));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(global_average_precision(preds, labels));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_GlobalAveragePrecision)->Arg(1000)->Arg(10000)->Complexity();

void BM_RecordStreamRoundTrip(benchmark::State& state) {
  Rng rng(3);
  std::vector<std::vector<uint8_t>> payloads;
  for (int i = 0; i < 64; ++i) {
    std::vector<uint8_t> p(1024);
    for (auto& b : p) b = static_cast<uint8_t>(rng.next_u64());
    payloads.push_back(std::move(p));
  }
  for (auto _ : state) {
    auto bytes = write_record_stream(payloads);
    auto back = parse_record_stream(bytes);
    benchmark::DoNotOptimize(back.size());
  }
}
BENCHMARK(BM_RecordStreamRoundTrip);

void BM_BoostingUpdate(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(5);
  SampleWeights w = SampleWeights::initial(n);
  std::vector<double> err(n);
  for (auto& e : err) e = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(boosting_update(w, err));
  }
}
BENCHMARK(BM_BoostingUpdate)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
