#include "deskdta/prompt.hpp"

#include <string>

#include "deskdta/common.hpp"
#include "deskdta/encoders.hpp"

namespace dta {

Tensor linear_vec(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 1) fail(ErrorKind::Model, "linear map expects a feature vector");
  if (w.rank() != 2 || w.rows() != x.size())
    fail(ErrorKind::Model, "linear map expects " + std::to_string(w.rows()) +
                               " input features, got " + std::to_string(x.size()));
  Tensor row = tape.reshape(x, {1, x.size()});
  Tensor out = tape.add_row_bias(tape.matmul(row, w), b);
  return tape.reshape(out, {w.cols()});
}

ProjectionHeads ProjectionHeads::make(int64_t d, bool trans_enabled, uint64_t seed) {
  ProjectionHeads p;
  const int64_t target_in = trans_enabled ? 4 * d : 3 * d;
  p.w_d = glorot_uniform(3 * d, d, seed, "project.w_d");
  p.b_d = Tensor::zeros({d}, true);
  p.w_t = glorot_uniform(target_in, d, seed, "project.w_t");
  p.b_t = Tensor::zeros({d}, true);
  return p;
}

Tensor project_drug(Tape& tape, const ProjectionHeads& p, const Tensor& drug_view) {
  if (drug_view.rank() != 1 || drug_view.size() != p.w_d.rows())
    fail(ErrorKind::Model, "drug projection expects a " + std::to_string(p.w_d.rows()) +
                               "-wide view, got " +
                               std::to_string(drug_view.rank() == 1 ? drug_view.size() : -1));
  return linear_vec(tape, drug_view, p.w_d, p.b_d);
}

Tensor project_target(Tape& tape, const ProjectionHeads& p, const Tensor& target_view) {
  if (target_view.rank() != 1 || target_view.size() != p.w_t.rows())
    fail(ErrorKind::Model, "target projection expects a " + std::to_string(p.w_t.rows()) +
                               "-wide view, got " +
                               std::to_string(target_view.rank() == 1 ? target_view.size() : -1));
  return linear_vec(tape, target_view, p.w_t, p.b_t);
}

PromptGenerator PromptGenerator::make(int64_t d, uint64_t seed) {
  PromptGenerator g;
  g.w1_d = glorot_uniform(d, d, seed, "prompt.drug.w1");
  g.b1_d = Tensor::zeros({d}, true);
  g.w2_d = glorot_uniform(d, d, seed, "prompt.drug.w2");
  g.b2_d = Tensor::zeros({d}, true);
  g.w1_t = glorot_uniform(d, d, seed, "prompt.target.w1");
  g.b1_t = Tensor::zeros({d}, true);
  g.w2_t = glorot_uniform(d, d, seed, "prompt.target.w2");
  g.b2_t = Tensor::zeros({d}, true);
  g.w1_p = glorot_uniform(2 * d, d, seed, "prompt.pair.w1");
  g.b1_p = Tensor::zeros({d}, true);
  g.w2_p = glorot_uniform(d, d, seed, "prompt.pair.w2");
  g.b2_p = Tensor::zeros({d}, true);
  return g;
}

static Tensor two_layer_mlp(Tape& tape, const Tensor& x, const Tensor& w1, const Tensor& b1,
                            const Tensor& w2, const Tensor& b2) {
  return linear_vec(tape, tape.relu(linear_vec(tape, x, w1, b1)), w2, b2);
}

Prompts generate_prompts(Tape& tape, const PromptGenerator& g, const Tensor& z_d,
                         const Tensor& z_t) {
  Prompts p;
  p.drug = two_layer_mlp(tape, z_d, g.w1_d, g.b1_d, g.w2_d, g.b2_d);
  p.target = two_layer_mlp(tape, z_t, g.w1_t, g.b1_t, g.w2_t, g.b2_t);
  Tensor pair_in = tape.concat_cols({z_d, z_t});
  p.pair = two_layer_mlp(tape, pair_in, g.w1_p, g.b1_p, g.w2_p, g.b2_p);
  return p;
}

Prompts zero_prompts(int64_t d) {
  return {Tensor::zeros({d}), Tensor::zeros({d}), Tensor::zeros({d})};
}

Integrated integrate_prompts(Tape& tape, const Tensor& z_d, const Tensor& z_t,
                             const Prompts& p) {
  Integrated out;
  out.z_final_d = tape.add(z_d, p.drug);
  out.z_final_t = tape.add(z_t, p.target);
  out.z_final_aff = tape.add(tape.add(z_d, z_t), p.pair);
  return out;
}

AffinityHead AffinityHead::make(int64_t d, uint64_t seed, double dropout_rate) {
  AffinityHead h;
  h.w1 = glorot_uniform(3 * d, 4 * d, seed, "head.w1");
  h.b1 = Tensor::zeros({4 * d}, true);
  h.w2 = glorot_uniform(4 * d, d, seed, "head.w2");
  h.b2 = Tensor::zeros({d}, true);
  h.w3 = glorot_uniform(d, 1, seed, "head.w3");
  h.b3 = Tensor::zeros({1}, true);
  h.dropout_rate = dropout_rate;
  return h;
}

Tensor predict_affinity(Tape& tape, const AffinityHead& head, const Integrated& z,
                        DropoutCtx& dropout) {
  Tensor x = tape.concat_cols({z.z_final_d, z.z_final_t, z.z_final_aff});
  Tensor h1 = tape.dropout(tape.relu(linear_vec(tape, x, head.w1, head.b1)),
                           head.dropout_rate, dropout);
  Tensor h2 = tape.dropout(tape.relu(linear_vec(tape, h1, head.w2, head.b2)),
                           head.dropout_rate, dropout);
  return linear_vec(tape, h2, head.w3, head.b3);
}

}  // namespace dta
