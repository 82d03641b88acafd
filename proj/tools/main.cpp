#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "deskdta/checkpoint.hpp"
#include "deskdta/common.hpp"
#include "deskdta/config.hpp"
#include "deskdta/dataset.hpp"
#include "deskdta/fixtures.hpp"
#include "deskdta/gradcheck.hpp"
#include "deskdta/metrics.hpp"
#include "deskdta/model.hpp"
#include "deskdta/opcheck.hpp"
#include "deskdta/train.hpp"

namespace {

using namespace dta;

std::string exit_code_table() {
  std::ostringstream ss;
  ss << "Exit codes:\n  0: success, 1: internal fault";
  for (int k = 0; k <= static_cast<int>(ErrorKind::Undefined); ++k) {
    ss << ((k % 4 == 0) ? ",\n  " : ", ");
    ss << (3 + k) << ": " << error_kind_name(static_cast<ErrorKind>(k));
  }
  ss << "\nErrors print one line to stderr: \"error: <kind>: <reason>\"";
  return ss.str();
}

// Two-column TSV of (id, structure) rows; blank lines and '#' comments skipped.
void read_entity_tsv(const std::string& path, std::vector<std::string>& ids,
                     std::vector<std::string>& structures) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos)
      fail(ErrorKind::Input,
           path + ":" + std::to_string(lineno) + ": expected exactly 2 tab-separated columns");
    ids.push_back(line.substr(0, tab));
    structures.push_back(line.substr(tab + 1));
  }
  if (ids.empty()) fail(ErrorKind::Input, "'" + path + "' lists no entities");
}

std::vector<std::pair<int64_t, int64_t>> read_cell_list(const std::string& path) {
  std::vector<std::pair<int64_t, int64_t>> cells;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int64_t d = -1, t = -1;
    if (!(ss >> d >> t))
      fail(ErrorKind::Input,
           path + ":" + std::to_string(lineno) + ": expected two integer indices");
    cells.emplace_back(d, t);
  }
  return cells;
}

TrainConfig load_config_or_defaults(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  ParsedConfig parsed = load_config(path);
  for (const std::string& n : parsed.notices) std::cerr << n << "\n";
  return parsed.train;
}

Trainer make_restored_trainer(const DtaDataset& ds, const TrainConfig& cfg,
                              const std::string& checkpoint_path) {
  Trainer trainer(ds, cfg);
  if (!checkpoint_path.empty()) trainer.restore(load_checkpoint(checkpoint_path));
  return trainer;
}

std::string fmt_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

int cmd_convert(const std::string& drugs_path, const std::string& targets_path,
                const std::string& matrix_path, const std::string& out_path, bool kd,
                double train_fraction, uint64_t split_seed, const std::string& cells_path) {
  std::vector<std::string> drug_ids, smiles, target_ids, sequences;
  read_entity_tsv(drugs_path, drug_ids, smiles);
  read_entity_tsv(targets_path, target_ids, sequences);

  int64_t rows = 0, cols = 0;
  std::vector<double> matrix = read_matrix_file(matrix_path, rows, cols);
  if (rows != static_cast<int64_t>(drug_ids.size()) ||
      cols != static_cast<int64_t>(target_ids.size()))
    fail(ErrorKind::Input, "matrix is " + std::to_string(rows) + "x" + std::to_string(cols) +
                               " but " + std::to_string(drug_ids.size()) + " drugs and " +
                               std::to_string(target_ids.size()) + " targets were listed");

  MatrixConvertOptions opts;
  opts.apply_kd_to_pkd = kd;
  opts.train_fraction = train_fraction;
  opts.split_seed = split_seed;
  if (!cells_path.empty()) opts.test_cells = read_cell_list(cells_path);

  DtaDataset ds = convert_matrix(std::move(drug_ids), std::move(smiles), std::move(target_ids),
                                 std::move(sequences), matrix, opts);
  save_canonical_tsv(ds, out_path);
  std::cout << "wrote " << out_path << ": " << ds.samples.size() << " samples ("
            << ds.n_train() << " train, " << ds.n_test() << " test), "
            << ds.skipped_non_finite << " missing cells skipped\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& log_path, const std::string& checkpoint_path,
              const std::string& resume_path, const std::vector<uint64_t>& seeds,
              bool progress) {
  DtaDataset ds = load_canonical_tsv(data_path);
  TrainConfig cfg = load_config_or_defaults(config_path);

  const bool multi = seeds.size() > 1;
  if (multi && !resume_path.empty())
    fail(ErrorKind::Usage, "--resume only applies to a single-seed run");

  std::vector<EvalReport> reports;
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (!seeds.empty()) cfg.seed = seeds[i];
    const std::string suffix = multi ? ".seed" + std::to_string(cfg.seed) : "";

    Trainer trainer(ds, cfg);
    TrainOptions opts;
    opts.log_path = log_path.empty() ? log_path : log_path + suffix;
    opts.checkpoint_path = checkpoint_path.empty() ? checkpoint_path : checkpoint_path + suffix;
    opts.resume_path = resume_path;
    opts.quiet = !progress;
    trainer.train(opts);

    if (ds.n_test() > 0) {
      EvalReport r = trainer.evaluate(true);
      reports.push_back(r);
      if (multi) std::cout << "seed " << cfg.seed << ":\n";
      std::cout << r.to_text();
    } else {
      std::cout << "trained " << cfg.epochs << " epochs on " << trainer.train_sample_count()
                << " pairs (no held-out split to score)\n";
    }
  }

  if (multi && !reports.empty()) {
    auto agg = [&](auto get, const char* name) {
      double sum = 0.0, mn = 1e300, mx = -1e300;
      for (const EvalReport& r : reports) {
        double v = get(r);
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      double mean = sum / static_cast<double>(reports.size());
      std::cout << name << ": mean " << fmt_metric(mean) << ", spread " << fmt_metric(mn)
                << ".." << fmt_metric(mx) << "\n";
    };
    std::cout << "across " << reports.size() << " seeds:\n";
    agg([](const EvalReport& r) { return r.mse; }, "mse");
    agg([](const EvalReport& r) { return r.ci; }, "ci");
    agg([](const EvalReport& r) { return r.pearson_r; }, "pearson_r");
    agg([](const EvalReport& r) { return r.r2m_value; }, "r2m");
  }
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& config_path,
             const std::string& checkpoint_path, const std::string& split) {
  DtaDataset ds = load_canonical_tsv(data_path);
  TrainConfig cfg = load_config_or_defaults(config_path);
  Trainer trainer = make_restored_trainer(ds, cfg, checkpoint_path);
  EvalReport r = trainer.evaluate(split == "test");
  std::cout << "split=" << split << "\n" << r.to_text();
  return 0;
}

int cmd_predict(const std::string& data_path, const std::string& config_path,
                const std::string& checkpoint_path, const std::string& pairs_path) {
  DtaDataset ds = load_canonical_tsv(data_path);
  TrainConfig cfg = load_config_or_defaults(config_path);
  Trainer trainer = make_restored_trainer(ds, cfg, checkpoint_path);

  std::ifstream in(pairs_path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + pairs_path + "'");

  std::cout << "drug_id\ttarget_id\tprediction\tnote\n";
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }

    PredictionRow row;
    if (cols.size() == 2) {
      // registered ids: reuse the stored structures
      row = trainer.predict({{cols[0], cols[1]}}).front();
    } else if (cols.size() == 4) {
      // raw structures supplied inline; ids label the output only
      row = trainer.predict_raw(cols[1], cols[3]);
      row.drug_id = cols[0];
      row.target_id = cols[2];
    } else {
      fail(ErrorKind::Input, pairs_path + ":" + std::to_string(lineno) +
                                 ": expected 2 columns (ids) or 4 (ids with structures), got " +
                                 std::to_string(cols.size()));
    }

    std::string note;
    if (row.cold_drug) note = "cold_drug";
    if (row.cold_target) note += note.empty() ? "cold_target" : "+cold_target";
    if (note.empty()) note = "-";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", row.value);
    std::cout << row.drug_id << "\t" << row.target_id << "\t" << buf << "\t" << note << "\n";
  }
  return 0;
}

int cmd_gradcheck(uint64_t seed, int64_t dim, int64_t stride, bool skip_model) {
  constexpr double kTol = 1e-4;
  bool all_ok = true;

  std::vector<OpCheckRow> rows = check_all_ops(seed);
  std::printf("%-18s %8s %14s  %s\n", "op", "entries", "max_rel_err", "status");
  for (const OpCheckRow& r : rows) {
    bool ok = r.max_rel_err < kTol;
    all_ok = all_ok && ok;
    std::printf("%-18s %8lld %14.3e  %s\n", r.op.c_str(),
                static_cast<long long>(r.entries), r.max_rel_err, ok ? "pass" : "FAIL");
  }

  if (!skip_model) {
    DtaDataset ds = four_pair_fixture();
    TrainConfig cfg;
    cfg.embed_dim = dim;
    cfg.max_seq_len = 64;
    cfg.dropout = 0.1;
    cfg.seed = seed;
    GradCheckReport report = full_model_grad_check(ds, cfg, stride);
    bool ok = report.max_rel_err < kTol;
    all_ok = all_ok && ok;
    std::printf("%-18s %8lld %14.3e  %s", "full_model",
                static_cast<long long>(report.entries_checked), report.max_rel_err,
                ok ? "pass" : "FAIL");
    if (!ok) std::printf("  (worst: %s[%lld])", report.worst_param.c_str(),
                         static_cast<long long>(report.worst_index));
    std::printf("\n");
  }

  if (!all_ok) fail(ErrorKind::Model, "gradient check failed, see table above");
  return 0;
}

int cmd_embed(const std::string& data_path, const std::string& config_path,
              const std::string& checkpoint_path, const std::string& out_path,
              double strong_threshold, const std::string& split) {
  DtaDataset ds = load_canonical_tsv(data_path);
  TrainConfig cfg = load_config_or_defaults(config_path);
  Trainer trainer = make_restored_trainer(ds, cfg, checkpoint_path);
  trainer.export_embeddings(out_path, strong_threshold, split == "test");
  int64_t n = split == "test" ? ds.n_test() : static_cast<int64_t>(ds.samples.size());
  std::cout << "wrote " << out_path << ": " << n << " rows, " << 3 * cfg.embed_dim
            << " embedding columns\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drug-target binding affinity: graph and sequence encoders with "
               "prompt-conditioned fusion"};
  app.require_subcommand(1);
  app.footer(exit_code_table());

  // convert
  std::string cv_drugs, cv_targets, cv_matrix, cv_out, cv_cells;
  bool cv_kd = false;
  double cv_fraction = 0.837;
  uint64_t cv_seed = 42;
  CLI::App* convert = app.add_subcommand(
      "convert", "Build a canonical TSV dataset from an entity-indexed affinity matrix");
  convert->add_option("--drugs", cv_drugs, "TSV of drug_id<TAB>SMILES")->required();
  convert->add_option("--targets", cv_targets, "TSV of target_id<TAB>sequence")->required();
  convert->add_option("--matrix", cv_matrix,
                      "drugs x targets affinity matrix, 'nan' for missing cells")
      ->required();
  convert->add_option("--out", cv_out, "output dataset path")->required();
  convert->add_flag("--kd-to-pkd", cv_kd, "treat matrix values as Kd in nM, store pKd");
  convert->add_option("--train-fraction", cv_fraction, "train share of the seeded split")
      ->check(CLI::Range(0.0, 1.0));
  convert->add_option("--split-seed", cv_seed, "seed for the random split");
  convert->add_option("--test-cells", cv_cells,
                      "file of explicit held-out cells: drug_index<WS>target_index per line");

  // train
  std::string tr_data, tr_config, tr_log, tr_ckpt, tr_resume;
  std::vector<uint64_t> tr_seeds;
  bool tr_progress = false;
  CLI::App* train = app.add_subcommand("train", "Train on a canonical TSV dataset");
  train->add_option("--data", tr_data, "canonical TSV dataset")->required();
  train->add_option("--config", tr_config, "key=value configuration file");
  train->add_option("--log", tr_log, "write the per-epoch TSV log here");
  train->add_option("--checkpoint", tr_ckpt, "write final training state here");
  train->add_option("--resume", tr_resume, "restore this training state first");
  train->add_option("--seeds", tr_seeds,
                    "run once per seed and report the spread of held-out metrics")
      ->delimiter(',');
  train->add_flag("--progress", tr_progress, "echo per-epoch lines to stderr");

  // eval
  std::string ev_data, ev_config, ev_ckpt, ev_split = "test";
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a trained state on one split");
  eval_cmd->add_option("--data", ev_data, "canonical TSV dataset")->required();
  eval_cmd->add_option("--config", ev_config, "key=value configuration file");
  eval_cmd->add_option("--checkpoint", ev_ckpt, "training state to score")->required();
  eval_cmd->add_option("--split", ev_split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));

  // predict
  std::string pr_data, pr_config, pr_ckpt, pr_pairs;
  CLI::App* predict = app.add_subcommand("predict", "Predict affinities for listed pairs");
  predict->add_option("--data", pr_data, "canonical TSV dataset (entity registries)")
      ->required();
  predict->add_option("--config", pr_config, "key=value configuration file");
  predict->add_option("--checkpoint", pr_ckpt, "training state to predict with");
  predict->add_option("--pairs", pr_pairs,
                      "TSV: drug_id<TAB>target_id, or drug_id<TAB>SMILES<TAB>target_id"
                      "<TAB>sequence for structures not in the dataset")
      ->required();

  // gradcheck
  uint64_t gc_seed = 1234;
  int64_t gc_dim = 8, gc_stride = 7;
  bool gc_skip_model = false;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Audit analytic gradients against finite differences");
  gradcheck->add_option("--seed", gc_seed, "seed for the probe inputs");
  gradcheck->add_option("--dim", gc_dim, "embedding width for the whole-model check")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--stride", gc_stride,
                        "probe every Nth parameter entry in the whole-model check")
      ->check(CLI::PositiveNumber);
  gradcheck->add_flag("--ops-only", gc_skip_model, "skip the whole-model check");

  // embed
  std::string em_data, em_config, em_ckpt, em_out, em_split = "test";
  double em_threshold = 7.0;
  CLI::App* embed = app.add_subcommand(
      "embed", "Export fused pair embeddings with strong/weak labels");
  embed->add_option("--data", em_data, "canonical TSV dataset")->required();
  embed->add_option("--config", em_config, "key=value configuration file");
  embed->add_option("--checkpoint", em_ckpt, "training state to embed with");
  embed->add_option("--out", em_out, "output TSV path")->required();
  embed->add_option("--strong-threshold", em_threshold,
                    "affinity at or above this labels a pair strong");
  embed->add_option("--split", em_split, "all or test")
      ->check(CLI::IsMember({"all", "test"}));

  try {
    app.parse(argc, argv);
    if (*convert)
      return cmd_convert(cv_drugs, cv_targets, cv_matrix, cv_out, cv_kd, cv_fraction, cv_seed,
                         cv_cells);
    if (*train) return cmd_train(tr_data, tr_config, tr_log, tr_ckpt, tr_resume,
                                 tr_seeds.empty() ? std::vector<uint64_t>{TrainConfig{}.seed}
                                                  : tr_seeds,
                                 tr_progress);
    if (*eval_cmd) return cmd_eval(ev_data, ev_config, ev_ckpt, ev_split);
    if (*predict) return cmd_predict(pr_data, pr_config, pr_ckpt, pr_pairs);
    if (*gradcheck) return cmd_gradcheck(gc_seed, gc_dim, gc_stride, gc_skip_model);
    if (*embed) return cmd_embed(em_data, em_config, em_ckpt, em_out, em_threshold, em_split);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and --version
    std::cerr << "error: usage: " << e.what() << "\n"
              << "run 'deskdta --help' for the command list and exit codes\n";
    return dta::Error(dta::ErrorKind::Usage, e.what()).exit_code();
  } catch (const dta::Error& e) {
    std::cerr << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
}
