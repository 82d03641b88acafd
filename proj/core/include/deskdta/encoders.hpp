#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "deskdta/sparse.hpp"
#include "deskdta/tensor.hpp"

namespace dta {

// Glorot-uniform initialisation, seeded per (seed, stream) so every
// parameter draws from its own deterministic sequence.
Tensor glorot_uniform(int64_t rows, int64_t cols, uint64_t seed, std::string_view stream);

// Uniform in [-limit, limit], same seeding scheme.
Tensor uniform_init(const Shape& shape, double limit, uint64_t seed, std::string_view stream);

// One graph convolution: ReLU(A H W). Feature width mismatches against W
// are reported as model-configuration errors rather than raw shape errors.
Tensor gcn_layer(Tape& tape, const SparseMatrix& adj, const Tensor& h, const Tensor& w);

struct GcnStack {
  std::vector<Tensor> weights;
};

// Applies every layer of the stack in order.
Tensor gcn_forward(Tape& tape, const SparseMatrix& adj, const Tensor& x, const GcnStack& stack);

// Mixes a per-target affinity vector into per-residue features:
// rows become [h + f(a), h - f(a)] where f is the bias-free map
// `fusion_w`, doubling the feature width. A zero affinity vector leaves
// [h, h], so cold-start targets degrade to plain sequence features.
Tensor fuse_affinity_into_protein(Tape& tape, const Tensor& h, const Tensor& affinity_vec,
                                  const Tensor& fusion_w);

// Global max pooling over node rows; returns a feature vector.
Tensor gmp_readout(Tape& tape, const Tensor& node_features);

struct TransformerBlock {
  Tensor wq, wk, wv, wo;      // d x d
  Tensor ff1, ff1_b;          // d x 2d, 2d
  Tensor ff2, ff2_b;          // 2d x d, d
  Tensor ln1_g, ln1_b;        // d
  Tensor ln2_g, ln2_b;        // d
};

// Post-norm encoder over residue tokens with sinusoidal positions and
// additive key masking for padding; pooling averages unmasked rows only.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(int64_t vocab, int64_t d_model, int64_t n_blocks, int64_t n_heads,
                     int64_t max_len, uint64_t seed, std::string_view stream);

  Tensor token_embed;              // vocab x d
  std::vector<TransformerBlock> blocks;
  int64_t d_model = 0;
  int64_t n_heads = 0;
  int64_t max_len = 0;

  const Tensor& positional_table() const { return pos_table_; }

 private:
  Tensor pos_table_;               // max_len x d, fixed (not trained)
};

// Per-block, per-head attention matrices captured for inspection.
struct AttentionTrace {
  std::vector<std::vector<Tensor>> weights;  // [block][head], each n x n
};

// Tokens use 0 as padding; at least one position must be real.
Tensor transformer_forward(Tape& tape, const TransformerEncoder& enc,
                           std::span<const int32_t> tokens, AttentionTrace* trace = nullptr);

}  // namespace dta
