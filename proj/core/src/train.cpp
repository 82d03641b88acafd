#include "deskdta/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "deskdta/common.hpp"

namespace dta {

std::vector<std::vector<int64_t>> batch_iter(int64_t n, int64_t batch_size, uint64_t seed,
                                             int64_t epoch) {
  if (n <= 0) fail(ErrorKind::Contract, "batch iterator over an empty sample set");
  if (batch_size <= 0) fail(ErrorKind::Contract, "batch size must be positive");
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed, fnv1a64("batch-order") ^ mix64(static_cast<uint64_t>(epoch)));
  for (size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<std::vector<int64_t>> batches;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<int64_t>(start),
                         order.begin() + static_cast<int64_t>(end));
  }
  return batches;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double metric_or_nan(double (*f)(std::span<const double>, std::span<const double>),
                     std::span<const double> a, std::span<const double> b) {
  try {
    return f(a, b);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Undefined) return std::nan("");
    throw;
  }
}

}  // namespace

Trainer::Trainer(const DtaDataset& ds, const TrainConfig& cfg,
                 const std::unordered_map<std::string, ContactMap>* contact_maps)
    : ds_(ds), cfg_(cfg) {
  if (ds.samples.empty()) fail(ErrorKind::Data, "dataset has no samples");
  dataset_fp_ = ds.fingerprint();

  for (size_t i = 0; i < ds.samples.size(); ++i)
    (ds.samples[i].test ? test_idx_ : train_idx_).push_back(static_cast<int64_t>(i));
  if (train_idx_.empty()) fail(ErrorKind::Data, "dataset has no training samples");

  if (cfg_.subsample < 1.0) {
    Rng rng(cfg_.seed, "train-subsample");
    for (size_t i = train_idx_.size() - 1; i > 0; --i)
      std::swap(train_idx_[i], train_idx_[rng.below(i + 1)]);
    auto keep = static_cast<size_t>(std::llround(
        cfg_.subsample * static_cast<double>(train_idx_.size())));
    keep = std::max<size_t>(keep, 1);
    train_idx_.resize(keep);
    std::sort(train_idx_.begin(), train_idx_.end());
  }

  std::vector<AffinityTriple> triples;
  for (int64_t i : train_idx_) {
    const Sample& s = ds.samples[static_cast<size_t>(i)];
    triples.push_back({ds.drug_ids[static_cast<size_t>(s.drug)],
                       ds.target_ids[static_cast<size_t>(s.target)], s.affinity});
  }
  AffinityGraph graph =
      AffinityGraph::build(ds.drug_ids, ds.target_ids, triples, cfg_.threshold_p);
  model_ = std::make_unique<Model>(cfg_, std::move(graph));
  adam_ = std::make_unique<Adam>(model_->params(), AdamConfig{cfg_.lr, 0.9, 0.999, 1e-8});

  ProteinGraphConfig pg;
  pg.threshold = cfg_.contact_threshold;
  pg.contact_at_least = cfg_.contact_at_least;
  pg.window = cfg_.window;
  pg.max_seq_len = cfg_.max_seq_len;
  for (size_t i = 0; i < ds.drug_ids.size(); ++i)
    drug_inputs_.push_back(make_drug_input(ds.drug_ids[i], ds.smiles[i]));
  for (size_t i = 0; i < ds.target_ids.size(); ++i) {
    const ContactMap* map = nullptr;
    if (contact_maps) {
      auto it = contact_maps->find(ds.target_ids[i]);
      if (it != contact_maps->end()) map = &it->second;
    }
    target_inputs_.push_back(make_target_input(ds.target_ids[i], ds.sequences[i], map, pg));
  }
}

const char* Trainer::log_header() {
  return "epoch\tl_mse\tl_prompt\ttotal\tclipped\teval";
}

void Trainer::forward_batch(Model::StepCtx& ctx, const std::vector<int64_t>& batch,
                            std::vector<Model::PairOutput>& outs) {
  outs.clear();
  outs.reserve(batch.size());
  for (int64_t i : batch) {
    const Sample& s = ds_.samples[static_cast<size_t>(i)];
    outs.push_back(model_->forward_pair(ctx, drug_inputs_[static_cast<size_t>(s.drug)],
                                        target_inputs_[static_cast<size_t>(s.target)]));
  }
}

void Trainer::train(const TrainOptions& opts) {
  if (!opts.resume_path.empty()) restore(load_checkpoint(opts.resume_path));

  std::ofstream log_file;
  if (!opts.log_path.empty()) {
    log_file.open(opts.log_path, std::ios::trunc);
    if (!log_file) fail(ErrorKind::Io, "cannot write log file '" + opts.log_path + "'");
    log_file << log_header() << "\n";
  }
  log_lines_.clear();
  log_lines_.push_back(log_header());

  std::vector<Model::PairOutput> outs;
  for (int64_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    auto batches = batch_iter(train_sample_count(), cfg_.batch_size, cfg_.seed, epoch);
    double sum_mse = 0.0, sum_prompt = 0.0, sum_total = 0.0;
    int64_t n_seen = 0, n_clipped = 0;
    for (size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      Tape tape;
      Model::StepCtx ctx = model_->begin_step(tape, true, global_step_);
      forward_batch(ctx, batch, outs);

      std::vector<Tensor> pred_parts;
      std::vector<Prompts> prompts;
      Tensor labels = Tensor::zeros({static_cast<int64_t>(batch.size())});
      for (size_t k = 0; k < batch.size(); ++k) {
        pred_parts.push_back(outs[k].pred);
        prompts.push_back(outs[k].prompts);
        labels.at(static_cast<int64_t>(k)) =
            ds_.samples[static_cast<size_t>(batch[k])].affinity;
      }
      Tensor preds = tape.concat_cols(pred_parts);
      Tensor l_mse = mse_loss(tape, preds, labels);
      Tensor l_prompt = prompt_loss(tape, prompts);
      Tensor total = total_loss(tape, l_mse, l_prompt, cfg_.alpha);
      if (!std::isfinite(total.at(0)))
        fail(ErrorKind::Training, "non-finite loss in epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(b));

      for (AdamParam& p : model_->params()) p.tensor.ensure_zero_grad();
      tape.backward(total);
      std::vector<Tensor> tensors;
      for (AdamParam& p : model_->params()) tensors.push_back(p.tensor);
      double norm = clip_grad_norm(tensors, cfg_.grad_clip);
      if (norm > cfg_.grad_clip) ++n_clipped;
      adam_->step();

      const auto bs = static_cast<double>(batch.size());
      sum_mse += l_mse.at(0) * bs;
      sum_prompt += l_prompt.at(0) * bs;
      sum_total += total.at(0) * bs;
      n_seen += static_cast<int64_t>(batch.size());
      ++global_step_;
    }

    std::string eval_col = "-";
    const bool last = epoch == cfg_.epochs;
    if ((cfg_.eval_every > 0 && epoch % cfg_.eval_every == 0) ||
        (last && !test_idx_.empty())) {
      if (!test_idx_.empty()) eval_col = evaluate(true).to_line();
    }
    const auto denom = static_cast<double>(n_seen);
    std::string line = std::to_string(epoch) + "\t" + fmt(sum_mse / denom) + "\t" +
                       fmt(sum_prompt / denom) + "\t" + fmt(sum_total / denom) + "\t" +
                       std::to_string(n_clipped) + "\t" + eval_col;
    log_lines_.push_back(line);
    if (log_file) log_file << line << "\n";
    if (!opts.quiet) std::cerr << line << "\n";
  }

  if (log_file && !log_file.flush())
    fail(ErrorKind::Io, "failed writing log file '" + opts.log_path + "'");
  if (!opts.checkpoint_path.empty()) save_checkpoint(opts.checkpoint_path, snapshot(cfg_.epochs));
}

EvalReport Trainer::evaluate(bool test_split) {
  const std::vector<int64_t>& idx = test_split ? test_idx_ : train_idx_;
  if (idx.empty())
    fail(ErrorKind::Data, std::string("no samples in the ") +
                              (test_split ? "test" : "train") + " split");
  EvalReport report;
  std::vector<double> labels, preds;
  std::vector<Model::PairOutput> outs;
  for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(cfg_.batch_size)) {
    size_t end = std::min(idx.size(), start + static_cast<size_t>(cfg_.batch_size));
    std::vector<int64_t> batch(idx.begin() + static_cast<int64_t>(start),
                               idx.begin() + static_cast<int64_t>(end));
    Tape tape(false);
    Model::StepCtx ctx = model_->begin_step(tape, false, 0);
    forward_batch(ctx, batch, outs);
    for (size_t k = 0; k < batch.size(); ++k) {
      labels.push_back(ds_.samples[static_cast<size_t>(batch[k])].affinity);
      preds.push_back(outs[k].pred.at(0));
      report.cold_drugs += outs[k].cold_drug ? 1 : 0;
      report.cold_targets += outs[k].cold_target ? 1 : 0;
    }
  }
  report.n_samples = static_cast<int64_t>(labels.size());
  double se = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double d = preds[i] - labels[i];
    se += d * d;
  }
  report.mse = se / static_cast<double>(labels.size());
  report.ci = metric_or_nan(&concordance_index, labels, preds);
  report.pearson_r = metric_or_nan(&pearson, labels, preds);
  report.r2m_value = metric_or_nan(&r2m, labels, preds);
  return report;
}

std::vector<PredictionRow> Trainer::predict(
    const std::vector<std::pair<std::string, std::string>>& id_pairs) {
  std::vector<PredictionRow> rows;
  for (const auto& [drug_id, target_id] : id_pairs) {
    auto di = ds_.drug_index(drug_id);
    auto ti = ds_.target_index(target_id);
    if (!di) fail(ErrorKind::Data, "unknown drug id '" + drug_id + "'");
    if (!ti) fail(ErrorKind::Data, "unknown target id '" + target_id + "'");
    Tape tape(false);
    Model::StepCtx ctx = model_->begin_step(tape, false, 0);
    Model::PairOutput out = model_->forward_pair(ctx, drug_inputs_[static_cast<size_t>(*di)],
                                                 target_inputs_[static_cast<size_t>(*ti)]);
    rows.push_back({drug_id, target_id, out.pred.at(0), out.cold_drug, out.cold_target});
  }
  return rows;
}

PredictionRow Trainer::predict_raw(const std::string& smiles_text,
                                   const std::string& sequence) {
  ProteinGraphConfig pg;
  pg.threshold = cfg_.contact_threshold;
  pg.contact_at_least = cfg_.contact_at_least;
  pg.window = cfg_.window;
  pg.max_seq_len = cfg_.max_seq_len;
  DrugInput drug = make_drug_input("", smiles_text);
  TargetInput target = make_target_input("", sequence, nullptr, pg);
  Tape tape(false);
  Model::StepCtx ctx = model_->begin_step(tape, false, 0);
  Model::PairOutput out = model_->forward_pair(ctx, drug, target);
  return {"", "", out.pred.at(0), out.cold_drug, out.cold_target};
}

void Trainer::export_embeddings(const std::string& path, double strong_threshold,
                                bool test_only) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write embedding file '" + path + "'");
  const int64_t d = cfg_.embed_dim;
  out << "drug_id\ttarget_id\taffinity\tlabel";
  for (int64_t i = 0; i < 3 * d; ++i) out << "\tz" << i;
  out << "\n";

  std::vector<int64_t> idx = test_only ? test_idx_ : train_idx_;
  if (!test_only) idx.insert(idx.end(), test_idx_.begin(), test_idx_.end());
  if (idx.empty()) fail(ErrorKind::Data, "no samples to embed");
  std::vector<Model::PairOutput> outs;
  for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(cfg_.batch_size)) {
    size_t end = std::min(idx.size(), start + static_cast<size_t>(cfg_.batch_size));
    std::vector<int64_t> batch(idx.begin() + static_cast<int64_t>(start),
                               idx.begin() + static_cast<int64_t>(end));
    Tape tape(false);
    Model::StepCtx ctx = model_->begin_step(tape, false, 0);
    forward_batch(ctx, batch, outs);
    for (size_t k = 0; k < batch.size(); ++k) {
      const Sample& s = ds_.samples[static_cast<size_t>(batch[k])];
      out << ds_.drug_ids[static_cast<size_t>(s.drug)] << '\t'
          << ds_.target_ids[static_cast<size_t>(s.target)] << '\t' << fmt(s.affinity) << '\t'
          << (s.affinity >= strong_threshold ? "strong" : "weak");
      const Integrated& z = outs[k].z;
      for (const Tensor* part : {&z.z_final_d, &z.z_final_t, &z.z_final_aff})
        for (int64_t i = 0; i < part->size(); ++i) out << '\t' << fmt(part->at(i));
      out << "\n";
    }
  }
  if (!out.flush()) fail(ErrorKind::Io, "failed writing embedding file '" + path + "'");
}

Checkpoint Trainer::snapshot(int64_t epoch) const {
  Checkpoint ck;
  ck.config_fp = config_fingerprint(cfg_);
  ck.dataset_fp = dataset_fp_;
  ck.epoch = epoch;
  ck.adam_t = adam_->t();
  const auto& params = model_->params();
  for (size_t i = 0; i < params.size(); ++i) {
    CheckpointEntry e;
    e.name = params[i].name;
    auto data = params[i].tensor.data();
    e.values.assign(data.begin(), data.end());
    e.adam_m = adam_->first_moments()[i];
    e.adam_v = adam_->second_moments()[i];
    ck.entries.push_back(std::move(e));
  }
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  if (ck.config_fp != config_fingerprint(cfg_))
    fail(ErrorKind::Data, "checkpoint was produced under a different configuration");
  if (ck.dataset_fp != dataset_fp_)
    fail(ErrorKind::Data, "checkpoint was produced from a different dataset");
  auto& params = model_->params();
  if (ck.entries.size() != params.size())
    fail(ErrorKind::Data, "checkpoint holds " + std::to_string(ck.entries.size()) +
                              " parameters, the model has " + std::to_string(params.size()));
  std::vector<std::vector<double>> m, v;
  for (size_t i = 0; i < params.size(); ++i) {
    const CheckpointEntry& e = ck.entries[i];
    if (e.name != params[i].name)
      fail(ErrorKind::Data, "checkpoint parameter '" + e.name + "' does not match model's '" +
                                params[i].name + "'");
    auto data = params[i].tensor.data();
    if (e.values.size() != data.size())
      fail(ErrorKind::Data, "checkpoint parameter '" + e.name + "' has " +
                                std::to_string(e.values.size()) + " values, expected " +
                                std::to_string(data.size()));
    std::copy(e.values.begin(), e.values.end(), data.begin());
    m.push_back(e.adam_m);
    v.push_back(e.adam_v);
  }
  adam_->restore(ck.adam_t, std::move(m), std::move(v));
}

}  // namespace dta
