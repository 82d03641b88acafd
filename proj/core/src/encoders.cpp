#include "deskdta/encoders.hpp"

#include <cmath>
#include <string>

#include "deskdta/common.hpp"

namespace dta {

Tensor glorot_uniform(int64_t rows, int64_t cols, uint64_t seed, std::string_view stream) {
  if (rows <= 0 || cols <= 0)
    fail(ErrorKind::Model, "glorot init needs positive fan sizes, got " + std::to_string(rows) +
                               " x " + std::to_string(cols));
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed, fnv1a64("init/") ^ fnv1a64(stream));
  Tensor t = Tensor::zeros({rows, cols}, true);
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor uniform_init(const Shape& shape, double limit, uint64_t seed, std::string_view stream) {
  Rng rng(seed, fnv1a64("init/") ^ fnv1a64(stream));
  Tensor t = Tensor::zeros(shape, true);
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor gcn_layer(Tape& tape, const SparseMatrix& adj, const Tensor& h, const Tensor& w) {
  if (h.rank() != 2 || w.rank() != 2)
    fail(ErrorKind::Model, "gcn layer expects rank-2 features and weights");
  if (h.cols() != w.rows())
    fail(ErrorKind::Model, "gcn layer weight expects " + std::to_string(w.rows()) +
                               " input features, node features have " + std::to_string(h.cols()));
  return tape.relu(tape.matmul(tape.spmm(adj, h), w));
}

Tensor gcn_forward(Tape& tape, const SparseMatrix& adj, const Tensor& x, const GcnStack& stack) {
  if (stack.weights.empty()) fail(ErrorKind::Model, "gcn stack has no layers");
  Tensor h = x;
  for (const Tensor& w : stack.weights) h = gcn_layer(tape, adj, h, w);
  return h;
}

Tensor fuse_affinity_into_protein(Tape& tape, const Tensor& h, const Tensor& affinity_vec,
                                  const Tensor& fusion_w) {
  if (h.rank() != 2) fail(ErrorKind::Model, "fusion expects rank-2 residue features");
  if (affinity_vec.rank() != 1 || affinity_vec.size() != h.cols())
    fail(ErrorKind::Model, "fusion affinity vector must match the residue feature width " +
                               std::to_string(h.cols()));
  if (fusion_w.rank() != 2 || fusion_w.rows() != h.cols() || fusion_w.cols() != h.cols())
    fail(ErrorKind::Model, "fusion map must be square over the feature width " +
                               std::to_string(h.cols()));
  const int64_t d = h.cols();
  Tensor fa = tape.matmul(tape.reshape(affinity_vec, {1, d}), fusion_w);
  Tensor ones = Tensor::full({h.rows(), 1}, 1.0);
  Tensor bcast = tape.matmul(ones, fa);
  return tape.concat_cols({tape.add(h, bcast), tape.sub(h, bcast)});
}

Tensor gmp_readout(Tape& tape, const Tensor& node_features) {
  if (node_features.rank() != 2) fail(ErrorKind::Model, "max pooling expects rank-2 features");
  return tape.max_over_rows(node_features);
}

static Tensor sinusoidal_table(int64_t max_len, int64_t d) {
  Tensor t = Tensor::zeros({max_len, d});
  for (int64_t p = 0; p < max_len; ++p) {
    for (int64_t i = 0; i * 2 < d; ++i) {
      double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
      double angle = static_cast<double>(p) * freq;
      t.at(p, 2 * i) = std::sin(angle);
      if (2 * i + 1 < d) t.at(p, 2 * i + 1) = std::cos(angle);
    }
  }
  return t;
}

TransformerEncoder::TransformerEncoder(int64_t vocab, int64_t d, int64_t n_blocks,
                                       int64_t heads, int64_t len, uint64_t seed,
                                       std::string_view stream)
    : d_model(d), n_heads(heads), max_len(len) {
  if (d <= 0 || heads <= 0 || d % heads != 0)
    fail(ErrorKind::Model, "transformer width " + std::to_string(d) +
                               " must divide evenly into " + std::to_string(heads) + " heads");
  std::string base(stream);
  token_embed = glorot_uniform(vocab, d, seed, base + ".token_embed");
  pos_table_ = sinusoidal_table(len, d);
  for (int64_t b = 0; b < n_blocks; ++b) {
    std::string pre = base + ".block" + std::to_string(b) + ".";
    TransformerBlock blk;
    blk.wq = glorot_uniform(d, d, seed, pre + "wq");
    blk.wk = glorot_uniform(d, d, seed, pre + "wk");
    blk.wv = glorot_uniform(d, d, seed, pre + "wv");
    blk.wo = glorot_uniform(d, d, seed, pre + "wo");
    blk.ff1 = glorot_uniform(d, 2 * d, seed, pre + "ff1");
    blk.ff1_b = Tensor::zeros({2 * d}, true);
    blk.ff2 = glorot_uniform(2 * d, d, seed, pre + "ff2");
    blk.ff2_b = Tensor::zeros({d}, true);
    blk.ln1_g = Tensor::full({d}, 1.0);
    blk.ln1_g.set_requires_grad(true);
    blk.ln1_b = Tensor::zeros({d}, true);
    blk.ln2_g = Tensor::full({d}, 1.0);
    blk.ln2_g.set_requires_grad(true);
    blk.ln2_b = Tensor::zeros({d}, true);
    blocks.push_back(std::move(blk));
  }
}

Tensor transformer_forward(Tape& tape, const TransformerEncoder& enc,
                           std::span<const int32_t> tokens, AttentionTrace* trace) {
  const int64_t n = static_cast<int64_t>(tokens.size());
  if (n == 0) fail(ErrorKind::Contract, "transformer got an empty token sequence");
  if (n > enc.max_len)
    fail(ErrorKind::Model, "sequence of " + std::to_string(n) +
                               " tokens exceeds the positional table length " +
                               std::to_string(enc.max_len));
  const int64_t d = enc.d_model;
  const int64_t dh = d / enc.n_heads;

  int64_t real = 0;
  for (int32_t t : tokens) {
    if (t < 0 || t >= enc.token_embed.rows())
      fail(ErrorKind::Contract, "token id " + std::to_string(t) + " outside the vocabulary");
    if (t != 0) ++real;
  }
  if (real == 0) fail(ErrorKind::Contract, "every position in the token sequence is padding");

  // Additive key mask shared by every attention row: 0 over real tokens,
  // -1e9 over padding, which underflows to an exact zero weight after the
  // softmax. Combined with the zero-skip in matmul, padded positions never
  // contribute to any real row's value, so padding the input is a no-op.
  Tensor key_mask = Tensor::zeros({n, n});
  for (int64_t j = 0; j < n; ++j) {
    if (tokens[j] != 0) continue;
    for (int64_t i = 0; i < n; ++i) key_mask.at(i, j) = -1e9;
  }

  Tensor h = tape.add(tape.embed_rows(enc.token_embed, tokens),
                      tape.slice_rows(enc.positional_table(), 0, n));
  if (trace) trace->weights.assign(enc.blocks.size(), {});

  for (size_t b = 0; b < enc.blocks.size(); ++b) {
    const TransformerBlock& blk = enc.blocks[b];
    Tensor q = tape.matmul(h, blk.wq);
    Tensor k = tape.matmul(h, blk.wk);
    Tensor v = tape.matmul(h, blk.wv);
    std::vector<Tensor> heads;
    for (int64_t hh = 0; hh < enc.n_heads; ++hh) {
      Tensor qh = tape.slice_cols(q, hh * dh, dh);
      Tensor kh = tape.slice_cols(k, hh * dh, dh);
      Tensor vh = tape.slice_cols(v, hh * dh, dh);
      Tensor scores = tape.scale(tape.matmul(qh, tape.transpose(kh)),
                                 1.0 / std::sqrt(static_cast<double>(dh)));
      Tensor attn = tape.softmax_rows(tape.add(scores, key_mask));
      if (trace) trace->weights[b].push_back(attn);
      heads.push_back(tape.matmul(attn, vh));
    }
    Tensor ctx = tape.matmul(tape.concat_cols(heads), blk.wo);
    h = tape.layer_norm_rows(tape.add(h, ctx), blk.ln1_g, blk.ln1_b, 1e-5);
    Tensor ff = tape.add_row_bias(
        tape.matmul(tape.relu(tape.add_row_bias(tape.matmul(h, blk.ff1), blk.ff1_b)), blk.ff2),
        blk.ff2_b);
    h = tape.layer_norm_rows(tape.add(h, ff), blk.ln2_g, blk.ln2_b, 1e-5);
  }

  // Mean over real rows only. Padded rows carry weight 0.0 and are skipped
  // by the matmul, keeping the pooled vector independent of padding.
  Tensor pool_row = Tensor::zeros({1, n});
  for (int64_t i = 0; i < n; ++i)
    if (tokens[i] != 0) pool_row.at(0, i) = 1.0;
  Tensor pooled = tape.scale(tape.matmul(pool_row, h), 1.0 / static_cast<double>(real));
  return tape.reshape(pooled, {d});
}

}  // namespace dta
