#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "deskdta/common.hpp"
#include "deskdta/encoders.hpp"
#include "deskdta/graph.hpp"
#include "deskdta/metrics.hpp"
#include "deskdta/smiles.hpp"
#include "deskdta/tensor.hpp"

namespace {

dta::Tensor rand_tensor(dta::Shape shape, uint64_t seed) {
  dta::Rng rng(seed, "bench");
  dta::Tensor t = dta::Tensor::zeros(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-1, 1);
  return t;
}

void BM_matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  dta::Tensor a = rand_tensor({n, n}, 1);
  dta::Tensor b = rand_tensor({n, n}, 2);
  dta::Tape tape(false);
  for (auto _ : state) {
    dta::Tensor c = tape.matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_forward_backward(benchmark::State& state) {
  const int64_t n = state.range(0);
  dta::Tensor x = rand_tensor({n, n}, 3);
  dta::Tensor w1 = rand_tensor({n, n}, 4);
  dta::Tensor w2 = rand_tensor({n, n}, 5);
  w1.set_requires_grad(true);
  w2.set_requires_grad(true);
  for (auto _ : state) {
    dta::Tape tape;
    dta::Tensor h = tape.relu(tape.matmul(x, w1));
    dta::Tensor loss = tape.mean(tape.matmul(h, w2));
    tape.backward(loss);
    benchmark::DoNotOptimize(w1.grad().data());
  }
}
BENCHMARK(BM_forward_backward)->Arg(32)->Arg(64);

void BM_parse_smiles(benchmark::State& state) {
  const std::string caffeine = "Cn1cnc2c1c(=O)n(C)c(=O)n2C";
  for (auto _ : state) {
    dta::MolGraph g = dta::parse_smiles(caffeine);
    benchmark::DoNotOptimize(g.atoms.size());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_parse_smiles);

void BM_gcn_forward(benchmark::State& state) {
  const int64_t n = state.range(0), fdim = 31, d = 128;
  dta::Rng rng(7, "bench-graph");
  std::vector<dta::Edge> edges;
  for (int64_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  for (int64_t i = 0; i < n; ++i) {
    auto j = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
    if (j != i) edges.push_back({i, j});
  }
  dta::SparseMatrix adj = dta::normalized_adjacency(n, edges);
  dta::Tensor x = rand_tensor({n, fdim}, 8);
  dta::GcnStack stack;
  stack.weights = {dta::glorot_uniform(fdim, d, 1, "bench.w0"),
                   dta::glorot_uniform(d, d, 1, "bench.w1"),
                   dta::glorot_uniform(d, d, 1, "bench.w2")};
  dta::Tape tape(false);
  for (auto _ : state) {
    dta::Tensor h = dta::gcn_forward(tape, adj, x, stack);
    benchmark::DoNotOptimize(h.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_gcn_forward)->Arg(32)->Arg(256);

void BM_transformer_forward(benchmark::State& state) {
  const int64_t len = state.range(0);
  dta::TransformerEncoder enc(22, 128, 2, 4, 1000, 5, "bench-transformer");
  dta::Rng rng(9, "bench-tokens");
  std::vector<int32_t> tokens(static_cast<size_t>(len));
  for (auto& t : tokens) t = static_cast<int32_t>(1 + rng.below(21));
  dta::Tape tape(false);
  for (auto _ : state) {
    dta::Tensor h = dta::transformer_forward(tape, enc, tokens);
    benchmark::DoNotOptimize(h.data().data());
  }
  state.SetItemsProcessed(state.iterations() * len);
}
BENCHMARK(BM_transformer_forward)->Arg(64)->Arg(256);

void BM_concordance_index(benchmark::State& state) {
  const auto n = static_cast<size_t>(state.range(0));
  dta::Rng rng(11, "bench-ci");
  std::vector<double> labels(n), preds(n);
  for (size_t i = 0; i < n; ++i) {
    labels[i] = 0.25 * static_cast<double>(rng.below(40));  // grid values give ties
    preds[i] = rng.uniform(0.0, 10.0);
  }
  for (auto _ : state) {
    double ci = dta::concordance_index(labels, preds);
    benchmark::DoNotOptimize(ci);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_concordance_index)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
