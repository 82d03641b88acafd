#include "deskdta/graph.hpp"

#include <algorithm>
#include <cmath>

namespace dta {

SparseMatrix normalized_adjacency(int64_t n, std::span<const Edge> edges) {
  if (n <= 0) fail(ErrorKind::Structural, "normalized_adjacency: empty graph");
  std::vector<Edge> canon;
  canon.reserve(edges.size() + static_cast<size_t>(n));
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      fail(ErrorKind::Structural,
           "normalized_adjacency: edge (" + std::to_string(a) + ", " +
               std::to_string(b) + ") outside " + std::to_string(n) +
               " nodes");
    if (a == b) continue;  // self-loops are added uniformly below
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  std::vector<double> degree(static_cast<size_t>(n), 1.0);  // self-loop
  for (const auto& [a, b] : canon) {
    degree[static_cast<size_t>(a)] += 1.0;
    degree[static_cast<size_t>(b)] += 1.0;
  }
  std::vector<double> inv_sqrt(degree.size());
  for (size_t i = 0; i < degree.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<SparseEntry> entries;
  entries.reserve(canon.size() * 2 + static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    entries.push_back({i, i, inv_sqrt[static_cast<size_t>(i)] *
                                 inv_sqrt[static_cast<size_t>(i)]});
  for (const auto& [a, b] : canon) {
    const double v =
        inv_sqrt[static_cast<size_t>(a)] * inv_sqrt[static_cast<size_t>(b)];
    entries.push_back({a, b, v});
    entries.push_back({b, a, v});
  }
  return SparseMatrix(n, n, std::move(entries));
}

}  // namespace dta
