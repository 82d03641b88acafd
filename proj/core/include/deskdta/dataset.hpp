#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace dta {

struct Sample {
  int64_t drug;    // index into the drug registry
  int64_t target;  // index into the target registry
  double affinity;
  bool test;       // held-out split member
};

// In-memory interaction dataset: entity registries plus measured pairs.
struct DtaDataset {
  std::vector<std::string> drug_ids;
  std::vector<std::string> smiles;      // parallel to drug_ids
  std::vector<std::string> target_ids;
  std::vector<std::string> sequences;   // parallel to target_ids
  std::vector<Sample> samples;
  int64_t skipped_non_finite = 0;       // rows dropped for NaN affinity
  std::string provenance;               // free-form note about the source

  int64_t n_train() const;
  int64_t n_test() const;
  std::optional<int64_t> drug_index(const std::string& id) const;
  std::optional<int64_t> target_index(const std::string& id) const;

  // Content hash over registries and samples; stable across loads of the
  // same file, independent of provenance notes.
  uint64_t fingerprint() const;
};

// Canonical interchange format: one header line then one measurement per
// row, tab separated. Split is "train" or "test".
inline constexpr const char* kCanonicalHeader =
    "drug_id\tsmiles\ttarget_id\tsequence\taffinity\tsplit";

DtaDataset load_canonical_tsv(const std::string& path);
void save_canonical_tsv(const DtaDataset& ds, const std::string& path);

// pKd from a dissociation constant in nanomolar units.
double kd_to_pkd(double kd_nm);

struct MatrixConvertOptions {
  bool apply_kd_to_pkd = false;
  // used when test_cells is empty: seeded shuffle of the finite cells
  double train_fraction = 0.837;
  uint64_t split_seed = 0;
  // explicit held-out cells as (drug row, target column)
  std::vector<std::pair<int64_t, int64_t>> test_cells;
};

// Builds a dataset from a drugs x targets affinity matrix with NaN holes.
DtaDataset convert_matrix(std::vector<std::string> drug_ids, std::vector<std::string> smiles,
                          std::vector<std::string> target_ids,
                          std::vector<std::string> sequences,
                          const std::vector<double>& matrix,
                          const MatrixConvertOptions& opts);

// Plain-text helpers for the matrix conversion inputs.
std::vector<std::string> read_nonempty_lines(const std::string& path);
std::vector<double> read_matrix_file(const std::string& path, int64_t& rows, int64_t& cols);

}  // namespace dta
