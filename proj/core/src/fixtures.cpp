#include "deskdta/fixtures.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "deskdta/common.hpp"
#include "deskdta/smiles.hpp"

namespace dta {

DtaDataset four_pair_fixture() {
  DtaDataset ds;
  ds.drug_ids = {"fx-d1", "fx-d2"};
  ds.smiles = {"CCO", "c1ccccc1O"};
  ds.target_ids = {"fx-t1", "fx-t2"};
  ds.sequences = {"ACDEFGHIK", "MKTAYIAKQR"};
  ds.samples = {
      {0, 0, 5.2, false},
      {0, 1, 6.8, false},
      {1, 0, 7.4, false},
      {1, 1, 4.9, true},
  };
  ds.provenance = "four-pair fixture";
  return ds;
}

DtaDataset overfit_fixture() {
  DtaDataset ds;
  ds.smiles = {"C",          "CC",       "CCO",      "CC(=O)O",
               "c1ccccc1",   "c1ccncc1", "CCN",      "C1CCCCC1"};
  ds.sequences = {"ACDEFGH", "MKTAYIA", "GGSSGGS", "LLVVAAW"};
  for (size_t i = 0; i < ds.smiles.size(); ++i) ds.drug_ids.push_back("ov-d" + std::to_string(i));
  for (size_t i = 0; i < ds.sequences.size(); ++i)
    ds.target_ids.push_back("ov-t" + std::to_string(i));
  for (int64_t d = 0; d < 8; ++d)
    for (int64_t t = 0; t < 4; ++t) {
      double y = 5.0 + 1.5 * std::sin(static_cast<double>(d) * 0.8) +
                 1.0 * std::cos(static_cast<double>(t) * 1.3) +
                 0.5 * std::sin(static_cast<double>(d * t) * 0.37);
      ds.samples.push_back({d, t, y, false});
    }
  ds.provenance = "thirty-two pair overfit fixture";
  return ds;
}

namespace {

// Latent drug score from the parsed structure: bigger, more aromatic and
// more oxygen-rich molecules score higher. Everything used here is also
// visible to the atom featuriser, so the mapping is learnable.
double drug_latent(const std::string& smi) {
  MolGraph mol = parse_smiles(smi);
  int64_t aromatic = 0, oxygens = 0, nitrogens = 0;
  for (const AtomRecord& a : mol.atoms) {
    aromatic += a.aromatic ? 1 : 0;
    oxygens += a.element == "O" ? 1 : 0;
    nitrogens += a.element == "N" ? 1 : 0;
  }
  const double n = static_cast<double>(mol.atoms.size());
  double u = 0.35 * (n / 16.0) + 0.35 * (static_cast<double>(aromatic) / 9.0) +
             0.15 * (static_cast<double>(oxygens) / 3.0) +
             0.15 * (static_cast<double>(nitrogens) / 3.0);
  return std::min(1.0, u);
}

double target_latent(const std::string& seq) {
  int64_t hydrophobic = 0;
  for (char c : seq)
    if (std::string("AVLIMFWC").find(c) != std::string::npos) ++hydrophobic;
  double frac = static_cast<double>(hydrophobic) / static_cast<double>(seq.size());
  double len = static_cast<double>(seq.size()) / 80.0;
  return std::min(1.0, 0.7 * frac * 2.0 + 0.3 * len);
}

}  // namespace

DtaDataset synthetic_surrogate(uint64_t seed) {
  // molecule grammar: optional head chain, an aromatic or aliphatic core,
  // optional tail; every combination is a valid structure
  const std::vector<std::string> heads = {"", "C", "CC", "CCC", "N", "O", "OC", "ClC"};
  const std::vector<std::string> cores = {"c1ccccc1", "c1ccncc1", "C1CCCCC1", "c1ccoc1",
                                          "C1CCNCC1"};
  const std::vector<std::string> tails = {"", "C", "O", "C(=O)O", "CN", "CO", "N", "CCO"};

  const std::vector<std::string> fragments = {
      "ACDEF", "GHIKL", "MNPQR", "STVWY", "AVLIM", "FWCAV", "GSTNQ", "DEKRH",
      "LLVVA", "PPGGS", "WYFMI", "KRHDE"};

  const int64_t n_drugs = 40, n_targets = 18;
  Rng rng(seed, "surrogate");

  DtaDataset base;
  std::vector<double> u(n_drugs), v(n_targets);
  for (int64_t i = 0; i < n_drugs; ++i) {
    std::string smi = heads[rng.below(heads.size())] + cores[rng.below(cores.size())] +
                      tails[rng.below(tails.size())];
    base.drug_ids.push_back("sd" + std::to_string(i));
    base.smiles.push_back(smi);
    u[static_cast<size_t>(i)] = drug_latent(smi);
  }
  for (int64_t i = 0; i < n_targets; ++i) {
    std::string seq;
    const int64_t n_frag = 8 + static_cast<int64_t>(rng.below(9));  // 40..80 residues
    for (int64_t f = 0; f < n_frag; ++f) seq += fragments[rng.below(fragments.size())];
    base.target_ids.push_back("st" + std::to_string(i));
    base.sequences.push_back(seq);
    v[static_cast<size_t>(i)] = target_latent(seq);
  }

  std::vector<double> matrix(static_cast<size_t>(n_drugs * n_targets));
  for (int64_t d = 0; d < n_drugs; ++d)
    for (int64_t t = 0; t < n_targets; ++t) {
      double ud = u[static_cast<size_t>(d)], vt = v[static_cast<size_t>(t)];
      double y = 4.0 + 2.5 * ud + 1.8 * vt + 1.2 * ud * vt + rng.uniform(-0.15, 0.15);
      matrix[static_cast<size_t>(d * n_targets + t)] = y;
    }

  MatrixConvertOptions opts;
  opts.train_fraction = 5.0 / 6.0;
  opts.split_seed = seed;
  DtaDataset ds = convert_matrix(std::move(base.drug_ids), std::move(base.smiles),
                                 std::move(base.target_ids), std::move(base.sequences),
                                 matrix, opts);
  ds.provenance = "synthetic surrogate, seed " + std::to_string(seed);
  return ds;
}

}  // namespace dta
