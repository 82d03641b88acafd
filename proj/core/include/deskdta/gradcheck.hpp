#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "deskdta/tensor.hpp"

namespace dta {

// Scalar-valued forward pass over a single input tensor. The callable is
// invoked many times; it must be deterministic in x.
using ScalarFn = std::function<Tensor(Tape&, const Tensor& x)>;

// Max over entries of |analytic - central difference| / max(1, |analytic|).
// The analytic side comes from one recorded backward pass, the numeric
// side from two non-recording forward evaluations per entry.
double grad_check(const ScalarFn& f, Tensor x, double h = 1e-5);

struct GradCheckParam {
  std::string name;
  Tensor tensor;  // requires_grad must be set
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t entries_checked = 0;
  std::vector<std::pair<std::string, double>> per_param;  // name, max rel err
};

struct GradCheckOptions {
  double h = 1e-5;
  // Probe every `stride`-th entry of each parameter (1 = every entry).
  int64_t stride = 1;
};

// Multi-parameter sweep for whole-model checks. `forward` rebuilds the loss
// from the current parameter values on the given tape.
GradCheckReport grad_check_params(std::vector<GradCheckParam> params,
                                  const std::function<Tensor(Tape&)>& forward,
                                  const GradCheckOptions& opts = {});

}  // namespace dta
