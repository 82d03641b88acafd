#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deskdta/prompt.hpp"
#include "deskdta/tensor.hpp"

namespace dta {

// Differentiable losses (built from tape ops).

// Mean squared error over aligned prediction / label vectors.
Tensor mse_loss(Tape& tape, const Tensor& preds, const Tensor& labels);

// Mean over the batch of (|p_drug|^2 + |p_target|^2 + |p_pair|^2) / 3.
Tensor prompt_loss(Tape& tape, std::span<const Prompts> prompts);

// l_mse + alpha * l_prompt.
Tensor total_loss(Tape& tape, const Tensor& l_mse, const Tensor& l_prompt, double alpha);

// Scalar evaluation metrics (plain doubles, no tape).

// Fraction of comparable pairs (different labels) ranked in the same
// order by the predictions, with ties in the prediction counting 0.5.
// Runs in O(n log n); matches the pairwise definition exactly.
double concordance_index(std::span<const double> labels, std::span<const double> preds);

// Direct O(n^2) pairwise evaluation of the same definition.
double concordance_index_quadratic(std::span<const double> labels,
                                   std::span<const double> preds);

double pearson(std::span<const double> x, std::span<const double> y);

// Squared correlation deflated by the gap to the through-origin fit:
// r^2 * (1 - sqrt(|r^2 - r0^2|)).
double r2m(std::span<const double> labels, std::span<const double> preds);

struct EvalReport {
  int64_t n_samples = 0;
  double mse = 0.0;
  double ci = 0.0;
  double pearson_r = 0.0;
  double r2m_value = 0.0;
  int64_t cold_drugs = 0;    // evaluated pairs whose drug had no training edges
  int64_t cold_targets = 0;

  std::string to_text() const;   // one key=value per line
  std::string to_line() const;   // single tab-separated record
};

}  // namespace dta
