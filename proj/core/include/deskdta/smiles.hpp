#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deskdta/graph.hpp"
#include "deskdta/tensor.hpp"

namespace dta {

enum class BondOrder : uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct AtomRecord {
  std::string element;     // symbol as written, capitalised ("C", "Cl", ...)
  bool aromatic = false;   // lowercase token or aromatic bracket symbol
  int formal_charge = 0;
  int explicit_h = -1;     // bracket H count; -1 means "apply valence rule"
  int h_count = 0;         // resolved hydrogen count
  bool in_ring = false;
  int degree = 0;          // incident heavy-atom bonds
};

struct MolBond {
  int32_t i;
  int32_t j;  // always i < j
  BondOrder order;
};

struct MolGraph {
  std::vector<AtomRecord> atoms;
  std::vector<MolBond> bonds;
  int64_t fragment_count = 0;  // dot-separated components
};

// Parses the organic-subset SMILES grammar: B/C/N/O/P/S/F/Cl/Br/I, aromatic
// lowercase forms, bracket atoms (isotope, chirality, H count, charge, class;
// stereo markers are accepted and discarded), bonds - = # : / \, branches,
// ring closures (digits and %nn) and dot-separated fragments. Hydrogens stay
// implicit. Errors carry the byte offset of the offending character.
MolGraph parse_smiles(std::string_view s);

inline constexpr int64_t kAtomFeatureDim = 31;

// Per-atom feature rows: element one-hot over
// {C,N,O,S,F,P,Cl,Br,I,B,Si,Se,other} (13), degree 0-6 (7), hydrogen count
// 0-4 (5), formal charge -2..+2 (5), aromatic flag (1). Out-of-range counts
// clamp into the last bucket.
Tensor featurize_atoms(const MolGraph& g);

// Bond list as undirected edges for adjacency construction.
std::vector<Edge> molecule_edges(const MolGraph& g);

}  // namespace dta
