#pragma once

#include <cstdint>
#include <vector>

#include "deskdta/common.hpp"

namespace dta {

class Tensor;

struct SparseEntry {
  int64_t row;
  int64_t col;
  double value;
};

// Immutable COO matrix with entries sorted by (row, col). Used for the
// degree-normalised adjacency matrices; treated as a non-differentiable
// constant by the autograd engine.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  // Validates indices, finiteness and duplicates; sorts entries.
  SparseMatrix(int64_t rows, int64_t cols, std::vector<SparseEntry> entries);

  static SparseMatrix identity(int64_t n);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t nnz() const { return static_cast<int64_t>(entries_.size()); }
  const std::vector<SparseEntry>& entries() const { return entries_; }

  Tensor dense() const;
  SparseMatrix transposed() const;
  bool is_symmetric(double tol = 0.0) const;

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<SparseEntry> entries_;
};

}  // namespace dta
