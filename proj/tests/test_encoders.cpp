#include "deskdta/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "deskdta/common.hpp"
#include "deskdta/gradcheck.hpp"
#include "deskdta/graph.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dta;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (int64_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::fabs(a.at(i) - b.at(i)));
  return worst;
}

}  // namespace

TEST_CASE("seeded init is reproducible and stream-separated") {
  Tensor a = glorot_uniform(4, 6, 42, "w1");
  Tensor b = glorot_uniform(4, 6, 42, "w1");
  Tensor c = glorot_uniform(4, 6, 42, "w2");
  CHECK(max_abs_diff(a, b) == 0.0);
  bool any_diff = false;
  for (int64_t i = 0; i < a.size(); ++i) any_diff |= a.at(i) != c.at(i);
  CHECK(any_diff);
  double limit = std::sqrt(6.0 / 10.0);
  for (double v : a.data()) CHECK(std::fabs(v) <= limit);
  CHECK(a.requires_grad());
}

TEST_CASE("single gcn layer on a two-node path") {
  // normalized adjacency of a 2-path is 0.5 everywhere, so both rows
  // average to (x0 + x1) / 2 before the weight
  std::vector<Edge> edges = {{0, 1}};
  SparseMatrix adj = normalized_adjacency(2, edges);
  Tensor x = Tensor::from({2, 1}, {1.0, 3.0}, true);
  Tensor w = Tensor::from({1, 1}, {2.0}, true);
  Tape tape;
  Tensor h = gcn_layer(tape, adj, x, w);
  // the normalised entries are (1/sqrt(2))^2, one ulp below 0.5
  CHECK(std::fabs(h.at(0, 0) - 4.0) < 1e-12);
  CHECK(std::fabs(h.at(1, 0) - 4.0) < 1e-12);
}

TEST_CASE("gcn layer reports feature width mismatch as a model error") {
  SparseMatrix adj = normalized_adjacency(2, std::vector<Edge>{{0, 1}});
  Tensor x = Tensor::zeros({2, 3}, true);
  Tensor w = Tensor::zeros({4, 5}, true);
  Tape tape;
  Error e = dtest::capture_error([&] { gcn_layer(tape, adj, x, w); });
  CHECK(e.kind() == ErrorKind::Model);
  CHECK(std::string(e.what()).find("4") != std::string::npos);
}

namespace {

struct PermutedGraph {
  SparseMatrix adj;
  Tensor x;
  std::vector<int64_t> perm;  // perm[old] = new
};

PermutedGraph permute_graph(const std::vector<Edge>& edges, const Tensor& x, uint64_t seed) {
  const int64_t n = x.rows();
  PermutedGraph out;
  out.perm.resize(static_cast<size_t>(n));
  std::iota(out.perm.begin(), out.perm.end(), 0);
  Rng rng(seed, "perm");
  for (int64_t i = n - 1; i > 0; --i)
    std::swap(out.perm[static_cast<size_t>(i)],
              out.perm[static_cast<size_t>(rng.below(static_cast<uint64_t>(i + 1)))]);
  std::vector<Edge> pe;
  for (const auto& [a, b] : edges)
    pe.push_back({out.perm[static_cast<size_t>(a)], out.perm[static_cast<size_t>(b)]});
  out.adj = normalized_adjacency(n, pe);
  out.x = Tensor::zeros({n, x.cols()});
  out.x.set_requires_grad(true);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < x.cols(); ++j)
      out.x.at(out.perm[static_cast<size_t>(i)], j) = x.at(i, j);
  return out;
}

}  // namespace

TEST_CASE("gcn stacks are permutation equivariant and max pooling is invariant") {
  const int64_t n = 7;
  std::vector<Edge> edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {2, 4}, {4, 5}, {5, 6}, {6, 2}};
  SparseMatrix adj = normalized_adjacency(n, edges);
  Tensor x = dtest::rand_tensor({n, 5}, 31);
  GcnStack stack;
  stack.weights = {glorot_uniform(5, 8, 7, "l0"), glorot_uniform(8, 4, 7, "l1")};

  Tape tape;
  Tensor h = gcn_forward(tape, adj, x, stack);
  Tensor pooled = gmp_readout(tape, h);

  for (uint64_t seed : {1u, 2u, 3u}) {
    PermutedGraph pg = permute_graph(edges, x, seed);
    Tape tape2;
    Tensor h2 = gcn_forward(tape2, pg.adj, pg.x, stack);
    Tensor pooled2 = gmp_readout(tape2, h2);

    double worst = 0.0;
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < h.cols(); ++j)
        worst = std::max(worst,
                         std::fabs(h.at(i, j) - h2.at(pg.perm[static_cast<size_t>(i)], j)));
    CHECK(worst < 1e-9);
    CHECK(max_abs_diff(pooled, pooled2) < 1e-9);
  }
}

TEST_CASE("empty stack and empty graph are rejected") {
  SparseMatrix adj = normalized_adjacency(2, std::vector<Edge>{{0, 1}});
  Tensor x = Tensor::zeros({2, 3});
  Tape tape;
  CHECK(dtest::capture_error([&] { gcn_forward(tape, adj, x, GcnStack{}); }).kind() ==
        ErrorKind::Model);
}

TEST_CASE("affinity fusion doubles the width with sum and difference halves") {
  Tensor h = Tensor::from({1, 2}, {1.0, 2.0}, true);
  Tensor a = Tensor::from({2}, {1.0, 0.0}, true);
  Tensor w = Tensor::from({2, 2}, {1.0, 2.0, 3.0, 4.0}, true);
  Tape tape;
  Tensor out = fuse_affinity_into_protein(tape, h, a, w);
  REQUIRE(out.rows() == 1);
  REQUIRE(out.cols() == 4);
  // f(a) = [1, 2], so the row is [1+1, 2+2, 1-1, 2-2]
  CHECK(out.at(0, 0) == 2.0);
  CHECK(out.at(0, 1) == 4.0);
  CHECK(out.at(0, 2) == 0.0);
  CHECK(out.at(0, 3) == 0.0);
}

TEST_CASE("a zero affinity vector degrades fusion to duplicated features") {
  Tensor h = dtest::rand_tensor({5, 4}, 17);
  Tensor a = Tensor::zeros({4});
  Tensor w = glorot_uniform(4, 4, 3, "fuse");
  Tape tape;
  Tensor out = fuse_affinity_into_protein(tape, h, a, w);
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t j = 0; j < 4; ++j) {
      CHECK(out.at(i, j) == h.at(i, j));
      CHECK(out.at(i, 4 + j) == h.at(i, j));
    }
}

TEST_CASE("fusion gradients agree with finite differences") {
  Tensor h = dtest::rand_tensor({3, 4}, 23);
  Tensor a = dtest::rand_tensor({4}, 24);
  Tensor w = glorot_uniform(4, 4, 25, "fw");
  h.set_requires_grad(true);
  a.set_requires_grad(true);
  auto report = grad_check_params({{"h", h}, {"a", a}, {"w", w}}, [&](Tape& tape) {
    Tensor out = fuse_affinity_into_protein(tape, h, a, w);
    return tape.sum(tape.mul(out, out));
  });
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("fusion validates widths") {
  Tape tape;
  Tensor h = Tensor::zeros({3, 4});
  CHECK(dtest::capture_error([&] {
          fuse_affinity_into_protein(tape, h, Tensor::zeros({5}), Tensor::zeros({4, 4}));
        }).kind() == ErrorKind::Model);
  CHECK(dtest::capture_error([&] {
          fuse_affinity_into_protein(tape, h, Tensor::zeros({4}), Tensor::zeros({4, 5}));
        }).kind() == ErrorKind::Model);
}

TEST_CASE("transformer attention rows are normalised over real tokens") {
  TransformerEncoder enc(10, 8, 2, 2, 16, 5, "tf");
  std::vector<int32_t> tokens = {3, 1, 4, 0, 0};
  Tape tape;
  AttentionTrace trace;
  Tensor pooled = transformer_forward(tape, enc, tokens, &trace);
  REQUIRE(pooled.rank() == 1);
  REQUIRE(pooled.size() == 8);
  REQUIRE(trace.weights.size() == 2);
  for (const auto& block : trace.weights) {
    REQUIRE(block.size() == 2);
    for (const Tensor& attn : block) {
      REQUIRE(attn.rows() == 5);
      for (int64_t i = 0; i < attn.rows(); ++i) {
        double row_sum = 0.0;
        for (int64_t j = 0; j < attn.cols(); ++j) row_sum += attn.at(i, j);
        CHECK(std::fabs(row_sum - 1.0) <= 1e-12);
        // padded keys carry exactly zero weight
        CHECK(attn.at(i, 3) == 0.0);
        CHECK(attn.at(i, 4) == 0.0);
      }
    }
  }
}

TEST_CASE("length-one sequences attend to themselves with weight one") {
  TransformerEncoder enc(10, 8, 1, 2, 16, 5, "tf1");
  std::vector<int32_t> tokens = {7};
  Tape tape;
  AttentionTrace trace;
  transformer_forward(tape, enc, tokens, &trace);
  for (const Tensor& attn : trace.weights[0]) {
    REQUIRE(attn.size() == 1);
    CHECK(attn.at(0, 0) == 1.0);
  }
}

TEST_CASE("padding the token sequence does not change the pooled embedding") {
  TransformerEncoder enc(22, 16, 2, 4, 32, 9, "tfpad");
  std::vector<int32_t> tokens = {5, 12, 1, 19, 3, 3, 8};
  std::vector<int32_t> padded = tokens;
  padded.insert(padded.end(), 10, 0);

  Tape tape;
  Tensor a = transformer_forward(tape, enc, tokens);
  Tape tape2;
  Tensor b = transformer_forward(tape2, enc, padded);
  CHECK(max_abs_diff(a, b) < 1e-9);
}

TEST_CASE("transformer forward is deterministic") {
  TransformerEncoder enc(22, 8, 2, 2, 16, 1, "tfdet");
  std::vector<int32_t> tokens = {2, 9, 14};
  Tape tape;
  Tensor a = transformer_forward(tape, enc, tokens);
  Tape tape2;
  Tensor b = transformer_forward(tape2, enc, tokens);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("transformer input contracts") {
  TransformerEncoder enc(10, 8, 1, 2, 4, 5, "tfc");
  Tape tape;
  std::vector<int32_t> empty;
  CHECK(dtest::capture_error([&] { transformer_forward(tape, enc, empty); }).kind() ==
        ErrorKind::Contract);
  std::vector<int32_t> all_pad = {0, 0, 0};
  CHECK(dtest::capture_error([&] { transformer_forward(tape, enc, all_pad); }).kind() ==
        ErrorKind::Contract);
  std::vector<int32_t> too_long = {1, 2, 3, 4, 5};
  CHECK(dtest::capture_error([&] { transformer_forward(tape, enc, too_long); }).kind() ==
        ErrorKind::Model);
  std::vector<int32_t> bad_token = {1, 42};
  CHECK(dtest::capture_error([&] { transformer_forward(tape, enc, bad_token); }).kind() ==
        ErrorKind::Contract);
  CHECK(dtest::capture_error([&] {
          TransformerEncoder bad(10, 9, 1, 2, 4, 5, "odd");
        }).kind() == ErrorKind::Model);
}

TEST_CASE("transformer gradients agree with finite differences") {
  TransformerEncoder enc(6, 8, 1, 2, 8, 13, "tfgrad");
  std::vector<int32_t> tokens = {1, 4, 2};
  std::vector<GradCheckParam> params = {{"token_embed", enc.token_embed}};
  const TransformerBlock& b = enc.blocks[0];
  params.push_back({"wq", b.wq});
  params.push_back({"wk", b.wk});
  params.push_back({"wv", b.wv});
  params.push_back({"wo", b.wo});
  params.push_back({"ff1", b.ff1});
  params.push_back({"ff1_b", b.ff1_b});
  params.push_back({"ff2", b.ff2});
  params.push_back({"ff2_b", b.ff2_b});
  params.push_back({"ln1_g", b.ln1_g});
  params.push_back({"ln1_b", b.ln1_b});
  params.push_back({"ln2_g", b.ln2_g});
  params.push_back({"ln2_b", b.ln2_b});

  Tensor mixer = dtest::rand_tensor({8}, 77);
  auto report = grad_check_params(params, [&](Tape& tape) {
    Tensor pooled = transformer_forward(tape, enc, tokens);
    return tape.sum(tape.mul(pooled, mixer));
  });
  CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("sinusoidal position table has unit-amplitude interleaved waves") {
  TransformerEncoder enc(10, 8, 1, 2, 32, 5, "tfpos");
  const Tensor& pos = enc.positional_table();
  REQUIRE(pos.rows() == 32);
  REQUIRE(pos.cols() == 8);
  // position 0: sin(0) = 0 on even columns, cos(0) = 1 on odd columns
  for (int64_t j = 0; j < 8; j += 2) CHECK(pos.at(0, j) == 0.0);
  for (int64_t j = 1; j < 8; j += 2) CHECK(pos.at(0, j) == 1.0);
  CHECK(pos.at(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(pos.at(1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  for (double v : pos.data()) CHECK(std::fabs(v) <= 1.0);
}
