#include "deskdta/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "deskdta/common.hpp"

namespace dta {

int64_t DtaDataset::n_train() const {
  int64_t n = 0;
  for (const Sample& s : samples) n += s.test ? 0 : 1;
  return n;
}

int64_t DtaDataset::n_test() const { return static_cast<int64_t>(samples.size()) - n_train(); }

std::optional<int64_t> DtaDataset::drug_index(const std::string& id) const {
  for (size_t i = 0; i < drug_ids.size(); ++i)
    if (drug_ids[i] == id) return static_cast<int64_t>(i);
  return std::nullopt;
}

std::optional<int64_t> DtaDataset::target_index(const std::string& id) const {
  for (size_t i = 0; i < target_ids.size(); ++i)
    if (target_ids[i] == id) return static_cast<int64_t>(i);
  return std::nullopt;
}

static std::string fmt_affinity(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

uint64_t DtaDataset::fingerprint() const {
  std::string blob;
  for (size_t i = 0; i < drug_ids.size(); ++i)
    blob += drug_ids[i] + "\t" + smiles[i] + "\n";
  for (size_t i = 0; i < target_ids.size(); ++i)
    blob += target_ids[i] + "\t" + sequences[i] + "\n";
  for (const Sample& s : samples)
    blob += std::to_string(s.drug) + "\t" + std::to_string(s.target) + "\t" +
            fmt_affinity(s.affinity) + "\t" + (s.test ? "test" : "train") + "\n";
  return fnv1a64(blob);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

[[noreturn]] void row_fail(const std::string& path, int64_t line_no, const std::string& msg) {
  fail(ErrorKind::Input, path + ":" + std::to_string(line_no) + ": " + msg);
}

double parse_affinity(const std::string& path, int64_t line_no, const std::string& text) {
  if (text == "nan" || text == "NaN" || text == "NA") return std::nan("");
  try {
    size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) row_fail(path, line_no, "trailing characters in affinity '" + text + "'");
    return v;
  } catch (const std::invalid_argument&) {
    row_fail(path, line_no, "affinity '" + text + "' is not a number");
  } catch (const std::out_of_range&) {
    row_fail(path, line_no, "affinity '" + text + "' is out of range");
  }
}

}  // namespace

DtaDataset load_canonical_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open dataset file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Input, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCanonicalHeader) {
    auto expected = split_tabs(kCanonicalHeader);
    auto got = split_tabs(line);
    for (const auto& col : expected)
      if (std::find(got.begin(), got.end(), col) == got.end())
        fail(ErrorKind::Input, path + ": header is missing column '" + col + "'");
    fail(ErrorKind::Input, path + ": header columns are present but out of order");
  }

  DtaDataset ds;
  std::unordered_map<std::string, int64_t> drug_of, target_of;
  std::map<std::pair<int64_t, int64_t>, bool> pair_split;  // -> is_test
  int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 6)
      row_fail(path, line_no,
               "expected 6 columns, got " + std::to_string(cols.size()));
    const std::string& drug_id = cols[0];
    const std::string& smi = cols[1];
    const std::string& target_id = cols[2];
    const std::string& seq = cols[3];
    if (drug_id.empty()) row_fail(path, line_no, "empty drug_id");
    if (target_id.empty()) row_fail(path, line_no, "empty target_id");
    if (smi.empty()) row_fail(path, line_no, "empty smiles");
    if (seq.empty()) row_fail(path, line_no, "empty sequence");

    double affinity = parse_affinity(path, line_no, cols[4]);
    bool is_test;
    if (cols[5] == "train")
      is_test = false;
    else if (cols[5] == "test")
      is_test = true;
    else
      row_fail(path, line_no, "split must be 'train' or 'test', got '" + cols[5] + "'");

    auto [dit, dfresh] = drug_of.try_emplace(drug_id, static_cast<int64_t>(ds.drug_ids.size()));
    if (dfresh) {
      ds.drug_ids.push_back(drug_id);
      ds.smiles.push_back(smi);
    } else if (ds.smiles[static_cast<size_t>(dit->second)] != smi) {
      row_fail(path, line_no, "drug '" + drug_id + "' has conflicting structures");
    }
    auto [tit, tfresh] =
        target_of.try_emplace(target_id, static_cast<int64_t>(ds.target_ids.size()));
    if (tfresh) {
      ds.target_ids.push_back(target_id);
      ds.sequences.push_back(seq);
    } else if (ds.sequences[static_cast<size_t>(tit->second)] != seq) {
      row_fail(path, line_no, "target '" + target_id + "' has conflicting sequences");
    }

    if (std::isnan(affinity)) {
      ++ds.skipped_non_finite;
      continue;
    }
    if (!std::isfinite(affinity)) row_fail(path, line_no, "affinity is infinite");

    auto key = std::make_pair(dit->second, tit->second);
    auto [pit, pfresh] = pair_split.try_emplace(key, is_test);
    if (!pfresh) {
      if (pit->second == is_test)
        row_fail(path, line_no, "pair (" + drug_id + ", " + target_id +
                                    ") appears twice in the same split");
      row_fail(path, line_no, "pair (" + drug_id + ", " + target_id +
                                  ") appears in both train and test");
    }
    ds.samples.push_back({dit->second, tit->second, affinity, is_test});
  }
  if (ds.samples.empty())
    fail(ErrorKind::Input, path + ": no usable rows (every affinity missing?)");
  return ds;
}

void save_canonical_tsv(const DtaDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write dataset file '" + path + "'");
  out << kCanonicalHeader << "\n";
  for (const Sample& s : ds.samples) {
    out << ds.drug_ids[static_cast<size_t>(s.drug)] << '\t'
        << ds.smiles[static_cast<size_t>(s.drug)] << '\t'
        << ds.target_ids[static_cast<size_t>(s.target)] << '\t'
        << ds.sequences[static_cast<size_t>(s.target)] << '\t' << fmt_affinity(s.affinity)
        << '\t' << (s.test ? "test" : "train") << "\n";
  }
  if (!out) fail(ErrorKind::Io, "failed writing dataset file '" + path + "'");
}

double kd_to_pkd(double kd_nm) {
  if (!(kd_nm > 0.0))
    fail(ErrorKind::Data, "dissociation constant must be positive, got " + fmt_affinity(kd_nm));
  // -log10(Kd / 1e9 nM) without forming the tiny intermediate
  return 9.0 - std::log10(kd_nm);
}

DtaDataset convert_matrix(std::vector<std::string> drug_ids, std::vector<std::string> smiles,
                          std::vector<std::string> target_ids,
                          std::vector<std::string> sequences,
                          const std::vector<double>& matrix,
                          const MatrixConvertOptions& opts) {
  const int64_t nd = static_cast<int64_t>(drug_ids.size());
  const int64_t nt = static_cast<int64_t>(target_ids.size());
  if (smiles.size() != drug_ids.size())
    fail(ErrorKind::Input, "got " + std::to_string(smiles.size()) + " structures for " +
                               std::to_string(nd) + " drug ids");
  if (sequences.size() != target_ids.size())
    fail(ErrorKind::Input, "got " + std::to_string(sequences.size()) + " sequences for " +
                               std::to_string(nt) + " target ids");
  if (static_cast<int64_t>(matrix.size()) != nd * nt)
    fail(ErrorKind::Input, "affinity matrix has " + std::to_string(matrix.size()) +
                               " cells, expected " + std::to_string(nd * nt));

  DtaDataset ds;
  ds.drug_ids = std::move(drug_ids);
  ds.smiles = std::move(smiles);
  ds.target_ids = std::move(target_ids);
  ds.sequences = std::move(sequences);

  std::vector<std::pair<int64_t, int64_t>> cells;
  for (int64_t d = 0; d < nd; ++d)
    for (int64_t t = 0; t < nt; ++t) {
      double v = matrix[static_cast<size_t>(d * nt + t)];
      if (std::isnan(v)) {
        ++ds.skipped_non_finite;
        continue;
      }
      if (!std::isfinite(v))
        fail(ErrorKind::Data, "affinity matrix cell (" + std::to_string(d) + ", " +
                                  std::to_string(t) + ") is infinite");
      cells.emplace_back(d, t);
    }
  if (cells.empty()) fail(ErrorKind::Data, "affinity matrix has no finite cells");

  std::vector<bool> is_test(cells.size(), false);
  if (!opts.test_cells.empty()) {
    std::map<std::pair<int64_t, int64_t>, size_t> cell_pos;
    for (size_t i = 0; i < cells.size(); ++i) cell_pos[cells[i]] = i;
    for (const auto& cell : opts.test_cells) {
      auto it = cell_pos.find(cell);
      if (it == cell_pos.end())
        fail(ErrorKind::Data, "held-out cell (" + std::to_string(cell.first) + ", " +
                                  std::to_string(cell.second) +
                                  ") is missing or outside the matrix");
      is_test[it->second] = true;
    }
  } else {
    if (!(opts.train_fraction > 0.0) || !(opts.train_fraction <= 1.0))
      fail(ErrorKind::Config, "train fraction must be in (0, 1]");
    std::vector<size_t> order(cells.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(opts.split_seed, "matrix-split");
    for (size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(i + 1)]);
    auto n_train = static_cast<size_t>(
        std::llround(opts.train_fraction * static_cast<double>(cells.size())));
    for (size_t i = n_train; i < order.size(); ++i) is_test[order[i]] = true;
  }

  for (size_t i = 0; i < cells.size(); ++i) {
    auto [d, t] = cells[i];
    double v = matrix[static_cast<size_t>(d * nt + t)];
    if (opts.apply_kd_to_pkd) v = kd_to_pkd(v);
    ds.samples.push_back({d, t, v, is_test[i]});
  }
  ds.provenance = "matrix conversion: " + std::to_string(ds.n_train()) + " train / " +
                  std::to_string(ds.n_test()) + " test cells";
  return ds;
}

std::vector<std::string> read_nonempty_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<double> read_matrix_file(const std::string& path, int64_t& rows, int64_t& cols) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<double> values;
  rows = 0;
  cols = -1;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string tok;
    int64_t row_cols = 0;
    while (row >> tok) {
      if (tok == "nan" || tok == "NaN" || tok == "NA") {
        values.push_back(std::nan(""));
      } else {
        try {
          size_t used = 0;
          values.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          fail(ErrorKind::Input, path + ":" + std::to_string(line_no) +
                                     ": bad matrix value '" + tok + "'");
        }
      }
      ++row_cols;
    }
    if (row_cols == 0) continue;
    if (cols == -1)
      cols = row_cols;
    else if (row_cols != cols)
      fail(ErrorKind::Input, path + ":" + std::to_string(line_no) + ": row has " +
                                 std::to_string(row_cols) + " values, expected " +
                                 std::to_string(cols));
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::Input, path + ": empty matrix");
  return values;
}

}  // namespace dta
