#pragma once

#include <cstdint>

#include "deskdta/tensor.hpp"

namespace dta {

// Affine map for a feature vector: x W + b with no nonlinearity.
Tensor linear_vec(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

// Projects the concatenated per-entity views down to the shared width d.
// The drug view is always [molecule | affinity+ | affinity-] = 3d wide;
// the target view gains a sequence embedding (+d) when the sequence
// encoder is enabled, so w_t is 3d x d or 4d x d accordingly.
struct ProjectionHeads {
  Tensor w_d, b_d;
  Tensor w_t, b_t;

  static ProjectionHeads make(int64_t d, bool trans_enabled, uint64_t seed);
};

Tensor project_drug(Tape& tape, const ProjectionHeads& p, const Tensor& drug_view);
Tensor project_target(Tape& tape, const ProjectionHeads& p, const Tensor& target_view);

// Three two-layer perceptrons (ReLU between layers, linear output)
// producing instance prompts: one per drug, one per target, one for the
// pair from [z_d | z_t].
struct PromptGenerator {
  Tensor w1_d, b1_d, w2_d, b2_d;  // d -> d -> d
  Tensor w1_t, b1_t, w2_t, b2_t;  // d -> d -> d
  Tensor w1_p, b1_p, w2_p, b2_p;  // 2d -> d -> d

  static PromptGenerator make(int64_t d, uint64_t seed);
};

struct Prompts {
  Tensor drug, target, pair;
};

Prompts generate_prompts(Tape& tape, const PromptGenerator& g, const Tensor& z_d,
                         const Tensor& z_t);

// Zero prompts of width d, recorded as constants; used when dynamic
// prompting is disabled so the integration path stays identical.
Prompts zero_prompts(int64_t d);

struct Integrated {
  Tensor z_final_d;    // z_d + p_drug
  Tensor z_final_t;    // z_t + p_target
  Tensor z_final_aff;  // z_d + z_t + p_pair
};

Integrated integrate_prompts(Tape& tape, const Tensor& z_d, const Tensor& z_t,
                             const Prompts& p);

// Regression head over [z_final_d | z_final_t | z_final_aff] = 3d:
// 3d -> 4d -> d -> 1 with ReLU and dropout after the first two layers.
struct AffinityHead {
  Tensor w1, b1;  // 3d x 4d
  Tensor w2, b2;  // 4d x d
  Tensor w3, b3;  // d x 1
  double dropout_rate = 0.1;

  static AffinityHead make(int64_t d, uint64_t seed, double dropout_rate = 0.1);
};

Tensor predict_affinity(Tape& tape, const AffinityHead& head, const Integrated& z,
                        DropoutCtx& dropout);

}  // namespace dta
