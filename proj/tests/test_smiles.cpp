#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "deskdta/graph.hpp"
#include "deskdta/smiles.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dta;
using dtest::capture_error;

namespace {

// Independent oracle: a flat token scan that never builds a graph. Atom and
// ring-closure tokens are counted directly; the bond count follows from the
// grammar (each fragment contributes a spanning tree, each matched ring
// closure adds one extra bond):
//   bonds = atoms - fragments + ring_closures / 2
struct ScanCounts {
  int atoms = 0;
  int ring_tokens = 0;
  int dots = 0;
  int aromatic = 0;

  int fragments() const { return dots + 1; }
  int bonds() const { return atoms - fragments() + ring_tokens / 2; }
};

ScanCounts scan_smiles(std::string_view s) {
  ScanCounts c;
  size_t p = 0;
  while (p < s.size()) {
    const char ch = s[p];
    if (ch == '[') {
      size_t q = p + 1;
      while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q])))
        ++q;  // isotope prefix
      if (q < s.size() && std::islower(static_cast<unsigned char>(s[q])))
        ++c.aromatic;
      ++c.atoms;
      while (p < s.size() && s[p] != ']') ++p;
      ++p;
    } else if (ch == '%') {
      ++c.ring_tokens;
      p += 3;
    } else if (std::isdigit(static_cast<unsigned char>(ch))) {
      ++c.ring_tokens;
      ++p;
    } else if (ch == '.') {
      ++c.dots;
      ++p;
    } else if ((ch == 'C' && p + 1 < s.size() && s[p + 1] == 'l') ||
               (ch == 'B' && p + 1 < s.size() && s[p + 1] == 'r')) {
      ++c.atoms;
      p += 2;
    } else if (std::strchr("BCNOPSFI", ch)) {
      ++c.atoms;
      ++p;
    } else if (std::strchr("bcnops", ch)) {
      ++c.atoms;
      ++c.aromatic;
      ++p;
    } else {
      ++p;  // bonds, branches, stereo markers
    }
  }
  return c;
}

struct CorpusRow {
  std::string name;
  std::string smiles;
  int atoms;
  int bonds;
  int aromatic;
};

std::vector<CorpusRow> load_corpus() {
  std::ifstream in(std::string(DESKDTA_TEST_DATA_DIR) + "/smiles_corpus.tsv");
  REQUIRE(in.good());
  std::vector<CorpusRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    CorpusRow r;
    std::string atoms, bonds, aromatic;
    std::getline(ls, r.name, '\t');
    std::getline(ls, r.smiles, '\t');
    std::getline(ls, atoms, '\t');
    std::getline(ls, bonds, '\t');
    std::getline(ls, aromatic, '\t');
    r.atoms = std::stoi(atoms);
    r.bonds = std::stoi(bonds);
    r.aromatic = std::stoi(aromatic);
    rows.push_back(std::move(r));
  }
  return rows;
}

int count_aromatic(const MolGraph& g) {
  int n = 0;
  for (const auto& a : g.atoms) n += a.aromatic;
  return n;
}

bool graphs_identical(const MolGraph& a, const MolGraph& b) {
  if (a.atoms.size() != b.atoms.size() || a.bonds.size() != b.bonds.size())
    return false;
  for (size_t i = 0; i < a.atoms.size(); ++i) {
    const auto& x = a.atoms[i];
    const auto& y = b.atoms[i];
    if (x.element != y.element || x.aromatic != y.aromatic ||
        x.formal_charge != y.formal_charge || x.h_count != y.h_count ||
        x.in_ring != y.in_ring || x.degree != y.degree)
      return false;
  }
  for (size_t i = 0; i < a.bonds.size(); ++i)
    if (a.bonds[i].i != b.bonds[i].i || a.bonds[i].j != b.bonds[i].j ||
        a.bonds[i].order != b.bonds[i].order)
      return false;
  return true;
}

}  // namespace

TEST_CASE("token scanner oracle agrees with hand-derived counts") {
  // spot anchors with documented heavy-atom counts
  CHECK(scan_smiles("CC(=O)Oc1ccccc1C(=O)O").atoms == 13);   // aspirin
  CHECK(scan_smiles("CN1C=NC2=C1C(=O)N(C(=O)N2C)C").atoms == 14);  // caffeine
  CHECK(scan_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)O").atoms == 15);    // ibuprofen
  CHECK(scan_smiles("c1ccccc1").bonds() == 6);
  CHECK(scan_smiles("CC(=O)[O-].[Na+]").bonds() == 3);
}

TEST_CASE("corpus parses and matches both oracles") {
  const auto rows = load_corpus();
  REQUIRE(rows.size() == 50);
  for (const auto& r : rows) {
    CAPTURE(r.name);
    CAPTURE(r.smiles);

    // frozen counts agree with the independent scanner
    const ScanCounts sc = scan_smiles(r.smiles);
    CHECK(sc.atoms == r.atoms);
    CHECK(sc.bonds() == r.bonds);
    CHECK(sc.aromatic == r.aromatic);

    // and the parser agrees with the frozen counts
    const MolGraph g = parse_smiles(r.smiles);
    CHECK(static_cast<int>(g.atoms.size()) == r.atoms);
    CHECK(static_cast<int>(g.bonds.size()) == r.bonds);
    CHECK(count_aromatic(g) == r.aromatic);

    // structural invariants
    for (const auto& b : g.bonds) {
      CHECK(b.i < b.j);
      CHECK(b.j < static_cast<int32_t>(g.atoms.size()));
    }
    std::vector<int> degree(g.atoms.size(), 0);
    for (const auto& b : g.bonds) {
      ++degree[b.i];
      ++degree[b.j];
    }
    for (size_t i = 0; i < g.atoms.size(); ++i)
      CHECK(g.atoms[i].degree == degree[i]);

    // parsing is idempotent
    CHECK(graphs_identical(g, parse_smiles(r.smiles)));

    // feature rows: four one-hot blocks and a flag
    const Tensor f = featurize_atoms(g);
    CHECK(f.rows() == r.atoms);
    CHECK(f.cols() == kAtomFeatureDim);
    for (int64_t i = 0; i < f.rows(); ++i) {
      auto block_sum = [&](int64_t lo, int64_t hi) {
        double s = 0.0;
        for (int64_t j = lo; j < hi; ++j) s += f.at(i, j);
        return s;
      };
      CHECK(block_sum(0, 13) == 1.0);
      CHECK(block_sum(13, 20) == 1.0);
      CHECK(block_sum(20, 25) == 1.0);
      CHECK(block_sum(25, 30) == 1.0);
      CHECK((f.at(i, 30) == 0.0 || f.at(i, 30) == 1.0));
    }
  }
}

TEST_CASE("specific molecular graphs") {
  SUBCASE("ethanol") {
    const MolGraph g = parse_smiles("CCO");
    REQUIRE(g.atoms.size() == 3);
    CHECK(g.atoms[0].element == "C");
    CHECK(g.atoms[1].element == "C");
    CHECK(g.atoms[2].element == "O");
    REQUIRE(g.bonds.size() == 2);
    CHECK(g.bonds[0].i == 0);
    CHECK(g.bonds[0].j == 1);
    CHECK(g.bonds[0].order == BondOrder::Single);
    CHECK(g.bonds[1].i == 1);
    CHECK(g.bonds[1].j == 2);
    CHECK(g.atoms[0].h_count == 3);
    CHECK(g.atoms[1].h_count == 2);
    CHECK(g.atoms[2].h_count == 1);
    for (const auto& a : g.atoms) CHECK(!a.in_ring);
  }
  SUBCASE("cyclopropane ring closure") {
    const MolGraph g = parse_smiles("C1CC1");
    REQUIRE(g.bonds.size() == 3);
    for (const auto& b : g.bonds) CHECK(b.order == BondOrder::Single);
    for (const auto& a : g.atoms) {
      CHECK(a.in_ring);
      CHECK(a.degree == 2);
      CHECK(a.h_count == 2);
    }
  }
  SUBCASE("benzene aromatic inference") {
    const MolGraph g = parse_smiles("c1ccccc1");
    REQUIRE(g.atoms.size() == 6);
    REQUIRE(g.bonds.size() == 6);
    for (const auto& a : g.atoms) {
      CHECK(a.aromatic);
      CHECK(a.in_ring);
      CHECK(a.h_count == 1);  // valence 4 minus two aromatic bonds
    }
    for (const auto& b : g.bonds) CHECK(b.order == BondOrder::Aromatic);
  }
  SUBCASE("ring atoms versus substituents") {
    const MolGraph g = parse_smiles("Cc1ccccc1");
    CHECK(!g.atoms[0].in_ring);
    for (size_t i = 1; i < 7; ++i) CHECK(g.atoms[i].in_ring);
  }
  SUBCASE("charges and explicit hydrogens") {
    const MolGraph g = parse_smiles("[NH4+]");
    CHECK(g.atoms[0].formal_charge == 1);
    CHECK(g.atoms[0].h_count == 4);
    CHECK(g.atoms[0].degree == 0);
    const MolGraph g2 = parse_smiles("[O-]");
    CHECK(g2.atoms[0].formal_charge == -1);
    CHECK(g2.atoms[0].h_count == 0);
    const MolGraph g3 = parse_smiles("[Fe+2]");
    CHECK(g3.atoms[0].formal_charge == 2);
    CHECK(g3.atoms[0].element == "Fe");
  }
  SUBCASE("fragments stay disconnected") {
    const MolGraph g = parse_smiles("CC(=O)[O-].[Na+]");
    CHECK(g.fragment_count == 2);
    CHECK(g.atoms[4].degree == 0);
  }
  SUBCASE("pyrrole nitrogen keeps its bracket hydrogen") {
    const MolGraph g = parse_smiles("c1cc[nH]c1");
    CHECK(g.atoms[3].element == "N");
    CHECK(g.atoms[3].aromatic);
    CHECK(g.atoms[3].h_count == 1);
  }
  SUBCASE("double bonds reduce hydrogen counts") {
    const MolGraph g = parse_smiles("C=O");
    CHECK(g.atoms[0].h_count == 2);
    CHECK(g.atoms[1].h_count == 0);
    const MolGraph g2 = parse_smiles("C#N");
    CHECK(g2.atoms[0].h_count == 1);
    CHECK(g2.atoms[1].h_count == 0);
  }
}

TEST_CASE("atom feature rows match the layout") {
  const MolGraph g = parse_smiles("CCO");
  const Tensor f = featurize_atoms(g);
  // oxygen row: element O, degree 1, one hydrogen, neutral, not aromatic
  CHECK(f.at(2, 2) == 1.0);        // element block, O at index 2
  CHECK(f.at(2, 13 + 1) == 1.0);   // degree 1
  CHECK(f.at(2, 20 + 1) == 1.0);   // H count 1
  CHECK(f.at(2, 25 + 2) == 1.0);   // charge 0
  CHECK(f.at(2, 30) == 0.0);

  const MolGraph g2 = parse_smiles("[CH4]");
  const Tensor f2 = featurize_atoms(g2);
  CHECK(f2.at(0, 13 + 0) == 1.0);  // degree 0
  CHECK(f2.at(0, 20 + 4) == 1.0);  // four hydrogens

  const MolGraph g3 = parse_smiles("[Fe+2]");
  const Tensor f3 = featurize_atoms(g3);
  CHECK(f3.at(0, 12) == 1.0);      // unknown element maps to "other"
  CHECK(f3.at(0, 25 + 4) == 1.0);  // charge +2
}

TEST_CASE("parse errors carry byte offsets") {
  SUBCASE("unclosed ring") {
    const Error e = capture_error([] { parse_smiles("C1CC"); });
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("unclosed ring bond 1") !=
          std::string::npos);
    CHECK(e.offset() == 4);  // end of input
  }
  SUBCASE("unbalanced parentheses") {
    const Error open = capture_error([] { parse_smiles("CC(C"); });
    CHECK(open.kind() == ErrorKind::Parse);
    CHECK(open.offset() == 2);
    const Error close = capture_error([] { parse_smiles("CC)C"); });
    CHECK(close.kind() == ErrorKind::Parse);
    CHECK(close.offset() == 2);
  }
  SUBCASE("unknown symbol") {
    const Error e = capture_error([] { parse_smiles("CCX"); });
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(e.offset() == 2);
  }
  SUBCASE("dangling bond") {
    CHECK(capture_error([] { parse_smiles("CC="); }).kind() ==
          ErrorKind::Parse);
    CHECK(capture_error([] { parse_smiles("C=.C"); }).kind() ==
          ErrorKind::Parse);
  }
  SUBCASE("empty input") {
    CHECK(capture_error([] { parse_smiles(""); }).kind() == ErrorKind::Parse);
  }
  SUBCASE("unterminated bracket") {
    const Error e = capture_error([] { parse_smiles("C[NH4"); });
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(e.offset() == 1);
  }
  SUBCASE("conflicting ring bond orders") {
    CHECK(capture_error([] { parse_smiles("C=1CCCCC#1"); }).kind() ==
          ErrorKind::Parse);
  }
  SUBCASE("duplicate bond") {
    CHECK(capture_error([] { parse_smiles("C12CC12"); }).kind() ==
          ErrorKind::Parse);
  }
}

TEST_CASE("molecule adjacency feeds the normalised graph") {
  // a 2-node path: A+I degrees are all 2, every entry becomes 1/2
  const MolGraph g = parse_smiles("CC");
  const SparseMatrix adj = normalized_adjacency(
      static_cast<int64_t>(g.atoms.size()), molecule_edges(g));
  REQUIRE(adj.nnz() == 4);
  for (const auto& e : adj.entries())
    CHECK(e.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(adj.is_symmetric());
}

TEST_CASE("normalised adjacency of a triangle is uniform") {
  std::vector<Edge> edges = {{0, 1}, {1, 2}, {0, 2}};
  const SparseMatrix adj = normalized_adjacency(3, edges);
  REQUIRE(adj.nnz() == 9);
  for (const auto& e : adj.entries())
    CHECK(e.value == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}
