#include "deskdta/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "deskdta/tensor.hpp"

namespace dta {

SparseMatrix::SparseMatrix(int64_t rows, int64_t cols,
                           std::vector<SparseEntry> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows < 0 || cols < 0)
    fail(ErrorKind::Structural, "sparse matrix with negative extent");
  for (const auto& e : entries_) {
    if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_)
      fail(ErrorKind::Structural,
           "sparse entry (" + std::to_string(e.row) + ", " +
               std::to_string(e.col) + ") outside " + std::to_string(rows_) +
               "x" + std::to_string(cols_));
    if (!std::isfinite(e.value))
      fail(ErrorKind::Structural,
           "non-finite sparse entry at (" + std::to_string(e.row) + ", " +
               std::to_string(e.col) + ")");
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const SparseEntry& a, const SparseEntry& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  for (size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].row == entries_[i - 1].row &&
        entries_[i].col == entries_[i - 1].col)
      fail(ErrorKind::Structural,
           "duplicate sparse entry at (" + std::to_string(entries_[i].row) +
               ", " + std::to_string(entries_[i].col) + ")");
}

SparseMatrix SparseMatrix::identity(int64_t n) {
  std::vector<SparseEntry> e;
  e.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) e.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(e));
}

Tensor SparseMatrix::dense() const {
  Tensor t = Tensor::zeros({rows_, cols_});
  for (const auto& e : entries_) t.at(e.row, e.col) = e.value;
  return t;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<SparseEntry> e;
  e.reserve(entries_.size());
  for (const auto& x : entries_) e.push_back({x.col, x.row, x.value});
  return SparseMatrix(cols_, rows_, std::move(e));
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  const SparseMatrix t = transposed();
  // both entry lists are sorted, so compare position by position
  if (t.entries_.size() != entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = t.entries_[i];
    if (a.row != b.row || a.col != b.col) return false;
    if (std::abs(a.value - b.value) > tol) return false;
  }
  return true;
}

}  // namespace dta
