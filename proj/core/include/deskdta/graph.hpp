#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "deskdta/sparse.hpp"

namespace dta {

using Edge = std::pair<int64_t, int64_t>;

// Symmetric degree-normalised adjacency with self-loops:
// D^{-1/2} (A + I) D^{-1/2} over a binary undirected A. Edges may be given
// in either orientation; duplicates collapse to a single entry.
SparseMatrix normalized_adjacency(int64_t n, std::span<const Edge> edges);

}  // namespace dta
