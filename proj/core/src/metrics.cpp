#include "deskdta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "deskdta/common.hpp"

namespace dta {

Tensor mse_loss(Tape& tape, const Tensor& preds, const Tensor& labels) {
  if (preds.rank() != 1 || labels.rank() != 1)
    fail(ErrorKind::Contract, "mse expects rank-1 prediction and label vectors");
  if (preds.size() != labels.size())
    fail(ErrorKind::Contract, "mse got " + std::to_string(preds.size()) + " predictions for " +
                                  std::to_string(labels.size()) + " labels");
  if (preds.size() == 0) fail(ErrorKind::Contract, "mse over an empty batch");
  Tensor diff = tape.sub(preds, labels);
  return tape.mean(tape.mul(diff, diff));
}

Tensor prompt_loss(Tape& tape, std::span<const Prompts> prompts) {
  if (prompts.empty()) fail(ErrorKind::Contract, "prompt loss over an empty batch");
  Tensor acc;
  for (const Prompts& p : prompts) {
    Tensor sq = tape.add(tape.add(tape.sum(tape.mul(p.drug, p.drug)),
                                  tape.sum(tape.mul(p.target, p.target))),
                         tape.sum(tape.mul(p.pair, p.pair)));
    Tensor item = tape.scale(sq, 1.0 / 3.0);
    acc = acc.defined() ? tape.add(acc, item) : item;
  }
  return tape.scale(acc, 1.0 / static_cast<double>(prompts.size()));
}

Tensor total_loss(Tape& tape, const Tensor& l_mse, const Tensor& l_prompt, double alpha) {
  return tape.add(l_mse, tape.scale(l_prompt, alpha));
}

static void require_metric_input(std::span<const double> labels, std::span<const double> preds,
                                 const char* what) {
  if (labels.size() != preds.size())
    fail(ErrorKind::Contract, std::string(what) + " got " + std::to_string(preds.size()) +
                                  " predictions for " + std::to_string(labels.size()) +
                                  " labels");
  for (double v : labels)
    if (!std::isfinite(v)) fail(ErrorKind::Domain, std::string(what) + ": non-finite label");
  for (double v : preds)
    if (!std::isfinite(v)) fail(ErrorKind::Domain, std::string(what) + ": non-finite prediction");
}

namespace {

// Fenwick tree over compressed prediction ranks; counts insertions.
class CountTree {
 public:
  explicit CountTree(int64_t n) : tree_(static_cast<size_t>(n) + 1, 0) {}
  void add(int64_t rank) {
    for (int64_t i = rank + 1; i < static_cast<int64_t>(tree_.size()); i += i & -i)
      ++tree_[static_cast<size_t>(i)];
  }
  // number of inserted values with rank < `rank`
  int64_t below(int64_t rank) const {
    int64_t s = 0;
    for (int64_t i = rank; i > 0; i -= i & -i) s += tree_[static_cast<size_t>(i)];
    return s;
  }

 private:
  std::vector<int64_t> tree_;
};

}  // namespace

double concordance_index(std::span<const double> labels, std::span<const double> preds) {
  require_metric_input(labels, preds, "concordance index");
  const int64_t n = static_cast<int64_t>(labels.size());

  std::vector<double> sorted_preds(preds.begin(), preds.end());
  std::sort(sorted_preds.begin(), sorted_preds.end());
  sorted_preds.erase(std::unique(sorted_preds.begin(), sorted_preds.end()),
                     sorted_preds.end());
  auto rank_of = [&](double v) {
    return static_cast<int64_t>(
        std::lower_bound(sorted_preds.begin(), sorted_preds.end(), v) - sorted_preds.begin());
  };

  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int64_t a, int64_t b) { return labels[static_cast<size_t>(a)] < labels[static_cast<size_t>(b)]; });

  CountTree tree(static_cast<int64_t>(sorted_preds.size()));
  int64_t inserted = 0;
  int64_t concordant = 0, tied = 0, comparable = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() &&
           labels[static_cast<size_t>(order[j])] == labels[static_cast<size_t>(order[i])])
      ++j;
    // Everything inserted so far has a strictly smaller label.
    for (size_t k = i; k < j; ++k) {
      int64_t r = rank_of(preds[static_cast<size_t>(order[k])]);
      int64_t less = tree.below(r);
      int64_t at_most = tree.below(r + 1);
      concordant += less;
      tied += at_most - less;
      comparable += inserted;
    }
    for (size_t k = i; k < j; ++k) tree.add(rank_of(preds[static_cast<size_t>(order[k])]));
    inserted += static_cast<int64_t>(j - i);
    i = j;
  }
  if (comparable == 0)
    fail(ErrorKind::Undefined, "concordance index undefined: no pair of labels differs");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
         static_cast<double>(comparable);
}

double concordance_index_quadratic(std::span<const double> labels,
                                   std::span<const double> preds) {
  require_metric_input(labels, preds, "concordance index");
  const size_t n = labels.size();
  double score = 0.0;
  int64_t comparable = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) continue;
      ++comparable;
      const bool i_larger = labels[i] > labels[j];
      const double p_hi = i_larger ? preds[i] : preds[j];
      const double p_lo = i_larger ? preds[j] : preds[i];
      if (p_hi > p_lo)
        score += 1.0;
      else if (p_hi == p_lo)
        score += 0.5;
    }
  }
  if (comparable == 0)
    fail(ErrorKind::Undefined, "concordance index undefined: no pair of labels differs");
  return score / static_cast<double>(comparable);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_metric_input(x, y, "pearson");
  const size_t n = x.size();
  if (n < 2) fail(ErrorKind::Undefined, "pearson undefined for fewer than two points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    fail(ErrorKind::Undefined, "pearson undefined: an input has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double r2m(std::span<const double> labels, std::span<const double> preds) {
  const double r = pearson(labels, preds);
  const double r2 = r * r;

  double spp = 0.0, spl = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    spp += preds[i] * preds[i];
    spl += preds[i] * labels[i];
  }
  if (spp == 0.0) fail(ErrorKind::Undefined, "r2m undefined: every prediction is zero");
  const double k = spl / spp;

  double ml = 0.0;
  for (double l : labels) ml += l;
  ml /= static_cast<double>(labels.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double e = labels[i] - k * preds[i];
    ss_res += e * e;
    const double d = labels[i] - ml;
    ss_tot += d * d;
  }
  const double r02 = 1.0 - ss_res / ss_tot;
  return r2 * (1.0 - std::sqrt(std::fabs(r2 - r02)));
}

static std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string EvalReport::to_text() const {
  std::string out;
  out += "n_samples=" + std::to_string(n_samples) + "\n";
  out += "mse=" + fmt_double(mse) + "\n";
  out += "ci=" + fmt_double(ci) + "\n";
  out += "pearson=" + fmt_double(pearson_r) + "\n";
  out += "r2m=" + fmt_double(r2m_value) + "\n";
  out += "cold_drugs=" + std::to_string(cold_drugs) + "\n";
  out += "cold_targets=" + std::to_string(cold_targets) + "\n";
  return out;
}

std::string EvalReport::to_line() const {
  std::string out = "n=" + std::to_string(n_samples);
  out += "\tmse=" + fmt_double(mse);
  out += "\tci=" + fmt_double(ci);
  out += "\tpearson=" + fmt_double(pearson_r);
  out += "\tr2m=" + fmt_double(r2m_value);
  return out;
}

}  // namespace dta
