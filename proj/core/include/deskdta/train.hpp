#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "deskdta/checkpoint.hpp"
#include "deskdta/config.hpp"
#include "deskdta/dataset.hpp"
#include "deskdta/metrics.hpp"
#include "deskdta/model.hpp"

namespace dta {

// Seeded batch order for one epoch: a full shuffle of [0, n) cut into
// batch-sized runs, keeping the final partial batch.
std::vector<std::vector<int64_t>> batch_iter(int64_t n, int64_t batch_size, uint64_t seed,
                                             int64_t epoch);

struct TrainOptions {
  std::string log_path;         // per-epoch TSV log; empty = keep in memory only
  std::string checkpoint_path;  // final training state; empty = do not write
  std::string resume_path;      // restore this state before training
  bool quiet = true;            // suppress progress lines on stderr
};

struct PredictionRow {
  std::string drug_id;
  std::string target_id;
  double value = 0.0;
  bool cold_drug = false;
  bool cold_target = false;
};

// Owns the model, optimiser and precomputed entity inputs for a dataset;
// drives training, evaluation, prediction and embedding export.
class Trainer {
 public:
  Trainer(const DtaDataset& ds, const TrainConfig& cfg,
          const std::unordered_map<std::string, ContactMap>* contact_maps = nullptr);

  Model& model() { return *model_; }
  const std::vector<std::string>& log_lines() const { return log_lines_; }
  static const char* log_header();

  // Full training run per the configuration. Deterministic: two runs from
  // the same dataset, config and seed produce identical logs and state.
  void train(const TrainOptions& opts = {});

  EvalReport evaluate(bool test_split);

  // Predictions for explicit entity pairs; unseen ids are flagged cold.
  std::vector<PredictionRow> predict(
      const std::vector<std::pair<std::string, std::string>>& id_pairs);

  // One pair given raw structures, bypassing the dataset registries.
  PredictionRow predict_raw(const std::string& smiles_text, const std::string& sequence);

  // Final embeddings for every sample in the chosen split, one row per
  // pair: ids, affinity, strong/weak label at the threshold, then the
  // concatenated [z_d | z_t | z_aff] coordinates.
  void export_embeddings(const std::string& path, double strong_threshold, bool test_only);

  Checkpoint snapshot(int64_t epoch) const;
  void restore(const Checkpoint& ck);

  int64_t train_sample_count() const { return static_cast<int64_t>(train_idx_.size()); }

 private:
  void forward_batch(Model::StepCtx& ctx, const std::vector<int64_t>& batch,
                     std::vector<Model::PairOutput>& outs);

  const DtaDataset& ds_;
  TrainConfig cfg_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<Adam> adam_;
  std::vector<DrugInput> drug_inputs_;
  std::vector<TargetInput> target_inputs_;
  std::vector<int64_t> train_idx_;  // after optional seeded subsampling
  std::vector<int64_t> test_idx_;
  std::vector<std::string> log_lines_;
  uint64_t dataset_fp_ = 0;
  uint64_t global_step_ = 0;
};

}  // namespace dta
