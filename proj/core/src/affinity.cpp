#include "deskdta/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "deskdta/common.hpp"

namespace dta {

AffinityGraph AffinityGraph::build(std::span<const std::string> all_drug_ids,
                                   std::span<const std::string> all_target_ids,
                                   std::span<const AffinityTriple> train_triples,
                                   double threshold_p) {
  AffinityGraph g;
  g.threshold_p_ = threshold_p;
  for (const auto& id : all_drug_ids) {
    auto [it, fresh] = g.drug_index_.try_emplace(id, g.n_drugs());
    if (!fresh) fail(ErrorKind::Data, "duplicate drug id '" + id + "' in registry");
    g.drug_ids_.push_back(id);
  }
  for (const auto& id : all_target_ids) {
    auto [it, fresh] = g.target_index_.try_emplace(id, g.n_targets());
    if (!fresh) fail(ErrorKind::Data, "duplicate target id '" + id + "' in registry");
    g.target_ids_.push_back(id);
  }

  // Collapse exact duplicates, reject pairs measured twice with different
  // affinities: silently keeping either value would bias the graph.
  std::map<std::pair<int64_t, int64_t>, double> seen;
  for (const auto& t : train_triples) {
    auto di = g.drug_index_.find(t.drug_id);
    if (di == g.drug_index_.end())
      fail(ErrorKind::Data, "training pair references unregistered drug '" + t.drug_id + "'");
    auto ti = g.target_index_.find(t.target_id);
    if (ti == g.target_index_.end())
      fail(ErrorKind::Data, "training pair references unregistered target '" + t.target_id + "'");
    if (!std::isfinite(t.affinity))
      fail(ErrorKind::Data, "non-finite affinity for pair (" + t.drug_id + ", " + t.target_id + ")");
    auto key = std::make_pair(di->second, ti->second);
    auto [it, fresh] = seen.try_emplace(key, t.affinity);
    if (!fresh) {
      if (it->second != t.affinity)
        fail(ErrorKind::Data, "conflicting affinities for pair (" + t.drug_id + ", " +
                                  t.target_id + ")");
      continue;
    }
  }

  const int64_t nd = g.n_drugs();
  std::vector<Edge> pos_e, neg_e;
  for (const auto& [key, affinity] : seen) {
    AffinityEdge e{key.first, key.second, affinity};
    Edge unified{key.first, nd + key.second};
    if (affinity >= threshold_p) {
      g.pos_edges_.push_back(e);
      pos_e.push_back(unified);
    } else {
      g.neg_edges_.push_back(e);
      neg_e.push_back(unified);
    }
  }
  if (g.n_nodes() == 0) fail(ErrorKind::Data, "affinity graph has no registered entities");
  g.adj_pos_ = normalized_adjacency(g.n_nodes(), pos_e);
  g.adj_neg_ = normalized_adjacency(g.n_nodes(), neg_e);
  return g;
}

std::optional<int64_t> AffinityGraph::drug_node(const std::string& id) const {
  auto it = drug_index_.find(id);
  if (it == drug_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int64_t> AffinityGraph::target_node(const std::string& id) const {
  auto it = target_index_.find(id);
  if (it == target_index_.end()) return std::nullopt;
  return n_drugs() + it->second;
}

static Tensor two_layer_gcn(Tape& tape, const SparseMatrix& adj, const Tensor& x,
                            const Tensor& w0, const Tensor& w1) {
  Tensor h = tape.relu(tape.matmul(tape.spmm(adj, x), w0));
  return tape.relu(tape.matmul(tape.spmm(adj, h), w1));
}

std::pair<Tensor, Tensor> encode_affinity(Tape& tape, const AffinityGraph& g,
                                          const Tensor& node_embed,
                                          const AffinityEncoderWeights& w) {
  if (node_embed.rank() != 2 || node_embed.rows() != g.n_nodes())
    fail(ErrorKind::Model, "node embedding table must have one row per graph node, got " +
                               std::to_string(node_embed.rank() == 2 ? node_embed.rows() : -1) +
                               " rows for " + std::to_string(g.n_nodes()) + " nodes");
  Tensor pos = two_layer_gcn(tape, g.adj_pos(), node_embed, w.w0_pos, w.w1_pos);
  Tensor neg = two_layer_gcn(tape, g.adj_neg(), node_embed, w.w0_neg, w.w1_neg);
  return {pos, neg};
}

}  // namespace dta
