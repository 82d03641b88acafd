#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deskdta/affinity.hpp"
#include "deskdta/config.hpp"
#include "deskdta/dataset.hpp"
#include "deskdta/encoders.hpp"
#include "deskdta/gradcheck.hpp"
#include "deskdta/optim.hpp"
#include "deskdta/prompt.hpp"
#include "deskdta/protein.hpp"
#include "deskdta/smiles.hpp"

namespace dta {

// Precomputed per-entity constants; built once per dataset, reused by
// every step that touches the entity.
struct DrugInput {
  std::string id;
  SparseMatrix adj;
  Tensor features;  // atoms x 31
};

struct TargetInput {
  std::string id;
  SparseMatrix adj;
  Tensor features;  // residues x 28
  std::vector<int32_t> tokens;
};

DrugInput make_drug_input(const std::string& id, const std::string& smiles_text);
TargetInput make_target_input(const std::string& id, const std::string& sequence,
                              const ContactMap* map, const ProteinGraphConfig& cfg);

// The full predictor: molecular graph encoders for both entities, the
// bipartite affinity-graph encoder, optional sequence transformer,
// projection to a shared width, instance prompts and the regression head.
class Model {
 public:
  Model(const TrainConfig& cfg, AffinityGraph graph);

  const TrainConfig& config() const { return cfg_; }
  const AffinityGraph& graph() const { return graph_; }

  // Stable name -> tensor registry driving the optimiser, checkpoints
  // and gradient checks. Order never changes for a given configuration.
  std::vector<AdamParam>& params() { return params_; }
  const std::vector<AdamParam>& params() const { return params_; }

  // When set, prompt generators still run but the integration consumes
  // zero constants; lets tests compare against the dp=false ablation.
  void set_force_zero_prompts(bool v) { force_zero_prompts_ = v; }

  // Per-batch state: the affinity graph is encoded once, entity branches
  // are cached so repeated drugs/targets in a batch cost one pass.
  struct StepCtx {
    Tape* tape = nullptr;
    bool training = false;
    DropoutCtx dropout;
    Tensor aff_pos, aff_neg;
    std::unordered_map<std::string, Tensor> drug_cache;
    std::unordered_map<std::string, Tensor> protein_cache;
    std::unordered_map<std::string, Tensor> sequence_cache;
  };
  StepCtx begin_step(Tape& tape, bool training, uint64_t step);

  struct PairOutput {
    Tensor pred;          // scalar affinity estimate
    Prompts prompts;      // the prompts that entered the integration
    Integrated z;         // final embeddings, exported by the embed command
    bool cold_drug = false;
    bool cold_target = false;
  };
  PairOutput forward_pair(StepCtx& ctx, const DrugInput& drug, const TargetInput& target);

 private:
  TrainConfig cfg_;
  AffinityGraph graph_;

  Tensor node_embed_;
  AffinityEncoderWeights aff_w_;
  GcnStack drug_gcn_;
  Tensor protein_w0_, protein_w1_, protein_w2_;
  Tensor fusion_w_;
  TransformerEncoder transformer_;
  ProjectionHeads project_;
  PromptGenerator prompt_gen_;
  AffinityHead head_;

  std::vector<AdamParam> params_;
  bool force_zero_prompts_ = false;
};

// Names of parameters whose gradient buffer is missing or identically
// zero after a backward pass; used to audit for dead weights.
std::vector<std::string> zero_grad_params(std::span<const AdamParam> params);

// Finite-difference audit of the whole model: builds a model from the
// dataset's train split, forms the combined training loss over every
// sample and probes each parameter entry (every stride-th one) against
// central differences.
GradCheckReport full_model_grad_check(const DtaDataset& ds, const TrainConfig& cfg,
                                      int64_t stride = 1);

}  // namespace dta
