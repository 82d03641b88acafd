#include <algorithm>
#include <cstdio>
#include <fstream>

#include "deskdta/protein.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dta;
using dtest::capture_error;

namespace {
ContactMap square_map(int64_t n, std::vector<double> v) {
  return ContactMap{n, std::move(v)};
}
}  // namespace

TEST_CASE("chain fallback windows") {
  SUBCASE("window 2 on a 3-residue sequence") {
    const ProteinGraph g = build_protein_graph("ACD");
    const std::vector<Edge> want = {{0, 1}, {0, 2}, {1, 2}};
    CHECK(g.edges == want);
  }
  SUBCASE("window 1 keeps only the backbone") {
    ProteinGraphConfig cfg;
    cfg.window = 1;
    const ProteinGraph g = build_protein_graph("ACDEF", nullptr, cfg);
    CHECK(g.edges.size() == 4);
    for (size_t i = 0; i < g.edges.size(); ++i)
      CHECK(g.edges[i] == Edge{static_cast<int64_t>(i),
                               static_cast<int64_t>(i) + 1});
  }
}

TEST_CASE("contact map thresholding") {
  // 4x4 map with a single long-range contact between residues 0 and 3
  std::vector<double> v(16, 0.0);
  v[0 * 4 + 3] = 0.9;
  v[3 * 4 + 0] = 0.9;
  const ContactMap map = square_map(4, v);

  SUBCASE("probability mode keeps values at or above threshold") {
    const ProteinGraph g = build_protein_graph("ACDE", &map);
    const std::vector<Edge> want = {{0, 1}, {0, 3}, {1, 2}, {2, 3}};
    CHECK(g.edges == want);
  }
  SUBCASE("nothing passes an impossible threshold") {
    ProteinGraphConfig cfg;
    cfg.threshold = 1.1;
    const ProteinGraph g = build_protein_graph("ACDE", &map, cfg);
    const std::vector<Edge> want = {{0, 1}, {1, 2}, {2, 3}};
    CHECK(g.edges == want);
  }
  SUBCASE("distance mode flips the comparison") {
    ProteinGraphConfig cfg;
    cfg.threshold = 8.0;
    cfg.contact_at_least = false;
    std::vector<double> d(16, 50.0);
    d[0 * 4 + 2] = 6.5;
    d[2 * 4 + 0] = 6.5;
    const ContactMap dist = square_map(4, d);
    const ProteinGraph g = build_protein_graph("ACDE", &dist, cfg);
    CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{0, 2}) !=
          g.edges.end());
    CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{0, 3}) ==
          g.edges.end());
  }
  SUBCASE("threshold monotonicity") {
    std::vector<double> r(16);
    Rng rng(5, "contact");
    for (auto& x : r) x = rng.uniform();
    for (int64_t i = 0; i < 4; ++i)
      for (int64_t j = 0; j < i; ++j) r[i * 4 + j] = r[j * 4 + i];
    const ContactMap m = square_map(4, r);
    ProteinGraphConfig lo, hi;
    lo.threshold = 0.3;
    hi.threshold = 0.7;
    const ProteinGraph glo = build_protein_graph("ACDE", &m, lo);
    const ProteinGraph ghi = build_protein_graph("ACDE", &m, hi);
    for (const Edge& e : ghi.edges)
      CHECK(std::find(glo.edges.begin(), glo.edges.end(), e) !=
            glo.edges.end());
  }
  SUBCASE("dimension mismatch") {
    const Error e =
        capture_error([&] { build_protein_graph("ACDEF", &map); });
    CHECK(e.kind() == ErrorKind::Input);
  }
  SUBCASE("backbone edges always present") {
    std::vector<double> zeros(16, 0.0);
    const ContactMap m = square_map(4, zeros);
    const ProteinGraph g = build_protein_graph("ACDE", &m);
    for (int64_t i = 0; i + 1 < 4; ++i)
      CHECK(std::find(g.edges.begin(), g.edges.end(), Edge{i, i + 1}) !=
            g.edges.end());
  }
}

TEST_CASE("unknown residues map to X and are counted") {
  const ProteinGraph g = build_protein_graph("ACZBD");
  CHECK(g.residues == "ACXXD");
  CHECK(g.unknown_count == 2);
  const ProteinGraph g2 = build_protein_graph("ACXD");
  CHECK(g2.unknown_count == 0);  // X itself is not a surprise
}

TEST_CASE("residue features") {
  const ProteinGraph g = build_protein_graph("KXAPFDG");
  const Tensor f = featurize_residues(g);
  REQUIRE(f.rows() == 7);
  REQUIRE(f.cols() == kResidueFeatureDim);

  // K: charged-positive and polar, not hydrophobic
  CHECK(f.at(0, 21) == 0.0);
  CHECK(f.at(0, 22) == 1.0);
  CHECK(f.at(0, 23) == 1.0);

  // X: alphabet bit only
  CHECK(f.at(1, 20) == 1.0);
  for (int64_t j = 21; j < 28; ++j) CHECK(f.at(1, j) == 0.0);

  // A: hydrophobic and small
  CHECK(f.at(2, 21) == 1.0);
  CHECK(f.at(2, 26) == 1.0);

  // P: proline flag
  CHECK(f.at(3, 27) == 1.0);

  // F: hydrophobic and aromatic
  CHECK(f.at(4, 21) == 1.0);
  CHECK(f.at(4, 25) == 1.0);

  // D: charged-negative and polar
  CHECK(f.at(5, 24) == 1.0);
  CHECK(f.at(5, 22) == 1.0);

  for (int64_t i = 0; i < f.rows(); ++i) {
    double alphabet = 0.0, total = 0.0;
    for (int64_t j = 0; j < 21; ++j) alphabet += f.at(i, j);
    for (int64_t j = 0; j < 28; ++j) total += f.at(i, j);
    CHECK(alphabet == 1.0);
    CHECK(total >= 1.0);
    CHECK(total <= 8.0);
  }
}

TEST_CASE("tokenization") {
  SUBCASE("alphabetical codes") {
    const std::vector<int32_t> want = {1, 2, 3};
    CHECK(tokenize("ACD") == want);
    const std::vector<int32_t> yw = {20, 19, 21};
    CHECK(tokenize("YWX") == yw);
  }
  SUBCASE("truncation at max_len") {
    const std::string seq(1200, 'A');
    CHECK(tokenize(seq).size() == 1000);
    CHECK(tokenize(seq, 50).size() == 50);
  }
  SUBCASE("graph tokens obey the configured cap") {
    ProteinGraphConfig cfg;
    cfg.max_seq_len = 3;
    const ProteinGraph g = build_protein_graph("ACDEF", nullptr, cfg);
    CHECK(g.tokens.size() == 3);
    CHECK(g.residues.size() == 5);  // the graph itself is not truncated
  }
}

TEST_CASE("contact map file round trip") {
  const std::string path = "/tmp/deskdta_test_map.map";
  {
    std::ofstream out(path);
    out << "3\n0 0.9 0.1\n0.9 0 0.8\n0.1 0.8 0\n";
  }
  const ContactMap m = load_contact_map(path);
  CHECK(m.n == 3);
  CHECK(m.at(0, 1) == 0.9);
  CHECK(m.at(2, 1) == 0.8);
  std::remove(path.c_str());

  CHECK(capture_error([] { load_contact_map("/nonexistent/x.map"); }).kind() ==
        ErrorKind::Io);

  {
    std::ofstream out(path);
    out << "2\n1 2\n3\n";  // one value short
  }
  CHECK(capture_error([&] { load_contact_map(path); }).kind() ==
        ErrorKind::Input);
  std::remove(path.c_str());
}
