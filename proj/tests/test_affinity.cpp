#include "deskdta/affinity.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "deskdta/common.hpp"
#include "deskdta/encoders.hpp"
#include "deskdta/gradcheck.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dta;

namespace {

std::vector<std::string> ids(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

double sparse_entry(const SparseMatrix& m, int64_t r, int64_t c) {
  for (const auto& e : m.entries())
    if (e.row == r && e.col == c) return e.value;
  return 0.0;
}

}  // namespace

TEST_CASE("affinity graph splits train edges by threshold") {
  auto drugs = ids({"d1", "d2"});
  auto targets = ids({"t1", "t2"});
  std::vector<AffinityTriple> train = {
      {"d1", "t1", 7.2}, {"d1", "t2", 5.1}, {"d2", "t1", 6.0}};
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);

  CHECK(g.n_drugs() == 2);
  CHECK(g.n_targets() == 2);
  CHECK(g.n_nodes() == 4);
  // affinity == p lands on the positive side
  REQUIRE(g.pos_edges().size() == 2);
  REQUIRE(g.neg_edges().size() == 1);
  CHECK(g.pos_edges()[0].drug == 0);
  CHECK(g.pos_edges()[0].target == 0);
  CHECK(g.pos_edges()[1].drug == 1);
  CHECK(g.pos_edges()[1].target == 0);
  CHECK(g.neg_edges()[0].drug == 0);
  CHECK(g.neg_edges()[0].target == 1);
  CHECK(g.neg_edges()[0].weight == 5.1);

  // unified node order: drugs first, then targets
  CHECK(g.drug_node("d2") == 1);
  CHECK(g.target_node("t1") == 2);
  CHECK(g.target_node("t2") == 3);
  CHECK_FALSE(g.drug_node("d9").has_value());

  // the positive adjacency links d1-t1 and d2-t1, nothing else off-diagonal
  CHECK(sparse_entry(g.adj_pos(), 0, 2) > 0.0);
  CHECK(sparse_entry(g.adj_pos(), 1, 2) > 0.0);
  CHECK(sparse_entry(g.adj_pos(), 0, 3) == 0.0);
  CHECK(sparse_entry(g.adj_neg(), 0, 3) > 0.0);
  CHECK(sparse_entry(g.adj_neg(), 0, 2) == 0.0);
  CHECK(g.adj_pos().is_symmetric(0.0));
  CHECK(g.adj_neg().is_symmetric(0.0));
}

TEST_CASE("entities without training edges still get isolated nodes") {
  auto drugs = ids({"d1", "d2", "d_cold"});
  auto targets = ids({"t1", "t_cold"});
  std::vector<AffinityTriple> train = {{"d1", "t1", 8.0}, {"d2", "t1", 4.0}};
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);

  CHECK(g.n_nodes() == 5);
  REQUIRE(g.drug_node("d_cold").has_value());
  int64_t cold = *g.drug_node("d_cold");
  // isolated node: self-loop only, degree 1 after the added loop
  CHECK(sparse_entry(g.adj_pos(), cold, cold) == 1.0);
  CHECK(sparse_entry(g.adj_neg(), cold, cold) == 1.0);
  for (const auto& e : g.adj_pos().entries())
    if (e.row == cold) CHECK(e.col == cold);
}

TEST_CASE("no training edge may touch a held-out pair") {
  // d2/t2 appear only in the (simulated) test split; building from the
  // train triples alone must leave that cell structurally empty.
  auto drugs = ids({"d1", "d2"});
  auto targets = ids({"t1", "t2"});
  std::vector<AffinityTriple> train = {{"d1", "t1", 7.0}, {"d1", "t2", 5.0}};
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);

  int64_t d2 = *g.drug_node("d2");
  int64_t t2 = *g.target_node("t2");
  CHECK(sparse_entry(g.adj_pos(), d2, t2) == 0.0);
  CHECK(sparse_entry(g.adj_neg(), d2, t2) == 0.0);
  for (const auto& e : g.pos_edges()) CHECK_FALSE(e.drug == 1);
  for (const auto& e : g.neg_edges()) CHECK_FALSE(e.drug == 1);
}

TEST_CASE("every train pair lands in exactly one polarity") {
  auto drugs = ids({"a", "b", "c"});
  auto targets = ids({"x", "y"});
  std::vector<AffinityTriple> train;
  Rng rng(99, "affinity-partition");
  for (const auto& d : {"a", "b", "c"})
    for (const auto& t : {"x", "y"})
      train.push_back({d, t, rng.uniform(3.0, 9.0)});
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);
  CHECK(g.pos_edges().size() + g.neg_edges().size() == train.size());
  for (const auto& e : g.pos_edges()) CHECK(e.weight >= 6.0);
  for (const auto& e : g.neg_edges()) CHECK(e.weight < 6.0);
}

TEST_CASE("duplicate and malformed training pairs") {
  auto drugs = ids({"d1"});
  auto targets = ids({"t1"});

  SUBCASE("exact duplicates collapse") {
    std::vector<AffinityTriple> train = {{"d1", "t1", 7.0}, {"d1", "t1", 7.0}};
    AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);
    CHECK(g.pos_edges().size() == 1);
  }
  SUBCASE("conflicting measurements are a data error") {
    std::vector<AffinityTriple> train = {{"d1", "t1", 7.0}, {"d1", "t1", 7.1}};
    Error e = dtest::capture_error(
        [&] { AffinityGraph::build(drugs, targets, train, 6.0); });
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("conflicting") != std::string::npos);
  }
  SUBCASE("unregistered entity is a data error") {
    std::vector<AffinityTriple> train = {{"d9", "t1", 7.0}};
    Error e = dtest::capture_error(
        [&] { AffinityGraph::build(drugs, targets, train, 6.0); });
    CHECK(e.kind() == ErrorKind::Data);
  }
  SUBCASE("duplicate registry ids are a data error") {
    auto dup = ids({"d1", "d1"});
    Error e = dtest::capture_error([&] {
      AffinityGraph::build(dup, targets, std::vector<AffinityTriple>{}, 6.0);
    });
    CHECK(e.kind() == ErrorKind::Data);
  }
  SUBCASE("non-finite affinity is a data error") {
    std::vector<AffinityTriple> train = {{"d1", "t1", std::nan("")}};
    Error e = dtest::capture_error(
        [&] { AffinityGraph::build(drugs, targets, train, 6.0); });
    CHECK(e.kind() == ErrorKind::Data);
  }
}

namespace {

// Dense reference for one polarity: relu(A relu(A X W0) W1) with plain loops.
std::vector<double> dense_two_layer(const std::vector<double>& adj, int64_t n,
                                    const std::vector<double>& x, int64_t d_in,
                                    const std::vector<double>& w0, int64_t d_mid,
                                    const std::vector<double>& w1, int64_t d_out) {
  auto mm = [](const std::vector<double>& a, int64_t ar, int64_t ac,
               const std::vector<double>& b, int64_t bc) {
    std::vector<double> c(static_cast<size_t>(ar * bc), 0.0);
    for (int64_t i = 0; i < ar; ++i)
      for (int64_t k = 0; k < ac; ++k) {
        double av = a[static_cast<size_t>(i * ac + k)];
        if (av == 0.0) continue;
        for (int64_t j = 0; j < bc; ++j)
          c[static_cast<size_t>(i * bc + j)] += av * b[static_cast<size_t>(k * bc + j)];
      }
    return c;
  };
  auto relu = [](std::vector<double> v) {
    for (double& e : v) e = e > 0.0 ? e : 0.0;
    return v;
  };
  std::vector<double> h1 = relu(mm(mm(adj, n, n, x, d_in), n, d_in, w0, d_mid));
  return relu(mm(mm(adj, n, n, h1, d_mid), n, d_mid, w1, d_out));
}

}  // namespace

TEST_CASE("affinity encoder matches a dense hand-rolled two-layer pass") {
  auto drugs = ids({"d1", "d2"});
  auto targets = ids({"t1"});
  std::vector<AffinityTriple> train = {{"d1", "t1", 7.5}, {"d2", "t1", 4.2}};
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);

  const int64_t n = g.n_nodes(), d = 4;
  Tensor x = uniform_init({n, d}, 0.05, 11, "node_embed");
  AffinityEncoderWeights w;
  w.w0_pos = glorot_uniform(d, d, 11, "w0_pos");
  w.w1_pos = glorot_uniform(d, d, 11, "w1_pos");
  w.w0_neg = glorot_uniform(d, d, 11, "w0_neg");
  w.w1_neg = glorot_uniform(d, d, 11, "w1_neg");

  Tape tape;
  auto [pos, neg] = encode_affinity(tape, g, x, w);
  REQUIRE(pos.rows() == n);
  REQUIRE(pos.cols() == d);

  auto flat = [](const Tensor& t) {
    return std::vector<double>(t.data().begin(), t.data().end());
  };
  auto check_against = [&](const Tensor& got, const SparseMatrix& adj, const Tensor& w0,
                           const Tensor& w1) {
    std::vector<double> ref = dense_two_layer(flat(adj.dense()), n, flat(x), d, flat(w0), d,
                                              flat(w1), d);
    double worst = 0.0;
    for (int64_t i = 0; i < got.size(); ++i)
      worst = std::max(worst, std::fabs(got.at(i) - ref[static_cast<size_t>(i)]));
    CHECK(worst < 1e-12);
  };
  check_against(pos, g.adj_pos(), w.w0_pos, w.w1_pos);
  check_against(neg, g.adj_neg(), w.w0_neg, w.w1_neg);
}

TEST_CASE("gradients reach the node embeddings and both weight pairs") {
  auto drugs = ids({"d1", "d2"});
  auto targets = ids({"t1"});
  std::vector<AffinityTriple> train = {{"d1", "t1", 7.5}, {"d2", "t1", 4.2}};
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);

  const int64_t n = g.n_nodes(), d = 3;
  Tensor x = uniform_init({n, d}, 0.5, 5, "ne");
  AffinityEncoderWeights w;
  w.w0_pos = glorot_uniform(d, d, 5, "a");
  w.w1_pos = glorot_uniform(d, d, 5, "b");
  w.w0_neg = glorot_uniform(d, d, 5, "c");
  w.w1_neg = glorot_uniform(d, d, 5, "e");

  std::vector<GradCheckParam> params = {{"node_embed", x}, {"w0_pos", w.w0_pos},
                                        {"w1_pos", w.w1_pos}, {"w0_neg", w.w0_neg},
                                        {"w1_neg", w.w1_neg}};
  auto report = grad_check_params(params, [&](Tape& tape) {
    auto [pos, neg] = encode_affinity(tape, g, x, w);
    // weight the rows so the pooled scalar depends on every node
    Tensor mixer = uniform_init({d, 1}, 1.0, 9, "mix");
    mixer.set_requires_grad(false);
    Tensor s = tape.add(tape.sum(tape.matmul(pos, mixer)), tape.sum(tape.matmul(neg, mixer)));
    return s;
  });
  CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("encoder rejects a mis-sized embedding table") {
  auto drugs = ids({"d1"});
  auto targets = ids({"t1"});
  std::vector<AffinityTriple> train = {{"d1", "t1", 7.0}};
  AffinityGraph g = AffinityGraph::build(drugs, targets, train, 6.0);
  Tensor x = Tensor::zeros({5, 4}, true);  // graph has 2 nodes
  AffinityEncoderWeights w;
  w.w0_pos = w.w1_pos = w.w0_neg = w.w1_neg = Tensor::zeros({4, 4}, true);
  Tape tape;
  Error e = dtest::capture_error([&] { encode_affinity(tape, g, x, w); });
  CHECK(e.kind() == ErrorKind::Model);
}
