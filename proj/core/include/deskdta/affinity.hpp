#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deskdta/graph.hpp"
#include "deskdta/sparse.hpp"
#include "deskdta/tensor.hpp"

namespace dta {

struct AffinityTriple {
  std::string drug_id;
  std::string target_id;
  double affinity;
};

struct AffinityEdge {
  int64_t drug;    // index into drug registry
  int64_t target;  // index into target registry
  double weight;   // measured affinity, kept as metadata
};

// Bipartite drug-target graph over the full entity registries, with edges
// taken from training pairs only. Edges with affinity >= p form the
// positive subgraph, the rest the negative one. Node order in the unified
// adjacency: all drugs first, then all targets.
class AffinityGraph {
 public:
  AffinityGraph() = default;

  static AffinityGraph build(std::span<const std::string> all_drug_ids,
                             std::span<const std::string> all_target_ids,
                             std::span<const AffinityTriple> train_triples,
                             double threshold_p);

  int64_t n_drugs() const { return static_cast<int64_t>(drug_ids_.size()); }
  int64_t n_targets() const { return static_cast<int64_t>(target_ids_.size()); }
  int64_t n_nodes() const { return n_drugs() + n_targets(); }

  const std::vector<std::string>& drug_ids() const { return drug_ids_; }
  const std::vector<std::string>& target_ids() const { return target_ids_; }
  const std::vector<AffinityEdge>& pos_edges() const { return pos_edges_; }
  const std::vector<AffinityEdge>& neg_edges() const { return neg_edges_; }
  const SparseMatrix& adj_pos() const { return adj_pos_; }
  const SparseMatrix& adj_neg() const { return adj_neg_; }
  double threshold_p() const { return threshold_p_; }

  // Node index in the unified adjacency, or nothing for cold-start ids.
  std::optional<int64_t> drug_node(const std::string& id) const;
  std::optional<int64_t> target_node(const std::string& id) const;

 private:
  std::vector<std::string> drug_ids_;
  std::vector<std::string> target_ids_;
  std::unordered_map<std::string, int64_t> drug_index_;
  std::unordered_map<std::string, int64_t> target_index_;
  std::vector<AffinityEdge> pos_edges_;
  std::vector<AffinityEdge> neg_edges_;
  SparseMatrix adj_pos_;
  SparseMatrix adj_neg_;
  double threshold_p_ = 0.0;
};

struct AffinityEncoderWeights {
  Tensor w0_pos, w1_pos;  // embed_dim x embed_dim each
  Tensor w0_neg, w1_neg;
};

// Two-layer pass ReLU(A ReLU(A X W0) W1) per polarity over the shared
// node embedding table; returns (positive, negative) node features.
std::pair<Tensor, Tensor> encode_affinity(Tape& tape, const AffinityGraph& g,
                                          const Tensor& node_embed,
                                          const AffinityEncoderWeights& w);

}  // namespace dta
