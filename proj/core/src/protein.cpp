#include "deskdta/protein.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace dta {

namespace {

constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";  // codes 1..20

int32_t residue_code(char c) {
  const size_t pos = kAlphabet.find(static_cast<char>(std::toupper(
      static_cast<unsigned char>(c))));
  return pos == std::string_view::npos ? 21 : static_cast<int32_t>(pos + 1);
}

bool in_set(char r, const char* set) { return std::strchr(set, r) != nullptr; }

}  // namespace

ContactMap load_contact_map(const std::string& path) {
  std::ifstream in(path);
  if (!in.good())
    fail(ErrorKind::Io, "cannot open contact map: " + path);
  ContactMap map;
  if (!(in >> map.n) || map.n <= 0)
    fail(ErrorKind::Input, "contact map " + path + ": bad size header");
  map.values.resize(static_cast<size_t>(map.n * map.n));
  for (auto& v : map.values)
    if (!(in >> v) || !std::isfinite(v))
      fail(ErrorKind::Input,
           "contact map " + path + ": expected " + std::to_string(map.n) +
               "x" + std::to_string(map.n) + " finite values");
  return map;
}

ProteinGraph build_protein_graph(std::string_view seq, const ContactMap* map,
                                 const ProteinGraphConfig& cfg) {
  if (seq.empty())
    fail(ErrorKind::Input, "protein sequence is empty");
  ProteinGraph g;
  g.residues.reserve(seq.size());
  for (char c : seq) {
    const int32_t code = residue_code(c);
    if (code == 21 && std::toupper(static_cast<unsigned char>(c)) != 'X')
      ++g.unknown_count;
    g.residues.push_back(
        code == 21 ? 'X'
                   : static_cast<char>(std::toupper(
                         static_cast<unsigned char>(c))));
  }
  const int64_t n = static_cast<int64_t>(g.residues.size());

  for (int64_t i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  if (map != nullptr) {
    if (map->n != n)
      fail(ErrorKind::Input, "contact map is " + std::to_string(map->n) +
                                 "x" + std::to_string(map->n) +
                                 " but the sequence has " + std::to_string(n) +
                                 " residues");
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = i + 2; j < n; ++j) {
        const double v = map->at(i, j);
        const bool contact =
            cfg.contact_at_least ? v >= cfg.threshold : v <= cfg.threshold;
        if (contact) g.edges.emplace_back(i, j);
      }
  } else {
    for (int64_t k = 2; k <= cfg.window; ++k)
      for (int64_t i = 0; i + k < n; ++i) g.edges.emplace_back(i, i + k);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

  g.tokens = tokenize(g.residues, cfg.max_seq_len);
  return g;
}

Tensor featurize_residues(const ProteinGraph& g) {
  const int64_t n = static_cast<int64_t>(g.residues.size());
  Tensor f = Tensor::zeros({n, kResidueFeatureDim});
  for (int64_t i = 0; i < n; ++i) {
    const char r = g.residues[static_cast<size_t>(i)];
    f.at(i, residue_code(r) - 1) = 1.0;
    if (r == 'X') continue;  // unknowns carry no property flags
    if (in_set(r, "AVLIMFWC")) f.at(i, 21) = 1.0;        // hydrophobic
    if (in_set(r, "STNQYHKRDE")) f.at(i, 22) = 1.0;      // polar incl. charged
    if (in_set(r, "KRH")) f.at(i, 23) = 1.0;             // charged positive
    if (in_set(r, "DE")) f.at(i, 24) = 1.0;              // charged negative
    if (in_set(r, "FWYH")) f.at(i, 25) = 1.0;            // aromatic ring
    if (in_set(r, "AGSC")) f.at(i, 26) = 1.0;            // small
    if (r == 'P') f.at(i, 27) = 1.0;                     // proline
  }
  return f;
}

std::vector<int32_t> tokenize(std::string_view seq, int64_t max_len) {
  const int64_t n =
      std::min<int64_t>(static_cast<int64_t>(seq.size()), max_len);
  std::vector<int32_t> tokens;
  tokens.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    tokens.push_back(residue_code(seq[static_cast<size_t>(i)]));
  return tokens;
}

}  // namespace dta
