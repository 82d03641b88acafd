#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deskdta/graph.hpp"
#include "deskdta/tensor.hpp"

namespace dta {

inline constexpr int64_t kResidueFeatureDim = 28;
inline constexpr int32_t kProteinVocab = 22;  // pad + 20 amino acids + X
inline constexpr int64_t kDefaultMaxSeqLen = 1000;

// Square residue-residue matrix, values either contact probabilities or
// distances depending on the producing pipeline.
struct ContactMap {
  int64_t n = 0;
  std::vector<double> values;  // row-major n*n

  double at(int64_t i, int64_t j) const {
    return values[static_cast<size_t>(i * n + j)];
  }
};

// File format: first line n, then n rows of n whitespace-separated floats.
ContactMap load_contact_map(const std::string& path);

struct ProteinGraphConfig {
  double threshold = 0.5;
  // true: edge when map value >= threshold (probability maps);
  // false: edge when map value <= threshold (distance maps).
  bool contact_at_least = true;
  int64_t window = 2;        // chain fallback: connect i to i+1..i+window
  int64_t max_seq_len = kDefaultMaxSeqLen;
};

struct ProteinGraph {
  std::string residues;          // cleaned sequence, unknown letters as X
  std::vector<Edge> edges;       // symmetric-deduplicated, i < j
  std::vector<int32_t> tokens;   // 1..21 codes, truncated to max_seq_len
  int64_t unknown_count = 0;     // letters that mapped to X
};

// Residue graph from a sequence: backbone edges always, plus either
// thresholded contact-map edges or a deterministic chain window fallback.
ProteinGraph build_protein_graph(std::string_view seq,
                                 const ContactMap* map = nullptr,
                                 const ProteinGraphConfig& cfg = {});

// One-hot over the 21-letter alphabet (21) followed by binary flags
// {hydrophobic, polar, charged+, charged-, aromatic ring, small, proline}.
// Charged residues count as polar.
Tensor featurize_residues(const ProteinGraph& g);

// A=1 through Y=20 in alphabetical order, X (and anything unknown) = 21;
// 0 is reserved for padding. Truncates to max_len.
std::vector<int32_t> tokenize(std::string_view seq,
                              int64_t max_len = kDefaultMaxSeqLen);

}  // namespace dta
