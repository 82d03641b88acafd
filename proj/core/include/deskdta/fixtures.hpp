#pragma once

#include <cstdint>

#include "deskdta/dataset.hpp"

namespace dta {

// Two drugs, two targets, four measured pairs (three train, one test).
// Small enough to finite-difference the entire model.
DtaDataset four_pair_fixture();

// Eight drugs by four targets, all thirty-two pairs in the train split,
// labels a smooth deterministic function of the indices. Exists to verify
// that the optimiser can drive the training error to zero.
DtaDataset overfit_fixture();

// Desk-scale stand-in for a public affinity matrix: generated molecules
// and sequences whose labels derive from observable structure (size,
// aromaticity, hydrophobic content) plus seeded noise, so the relation is
// learnable from the inputs alone. Roughly 600 train / 120 test pairs.
DtaDataset synthetic_surrogate(uint64_t seed = 7);

}  // namespace dta
