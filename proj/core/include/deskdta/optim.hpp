#pragma once

#include <string>
#include <vector>

#include "deskdta/tensor.hpp"

namespace dta {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamParam {
  std::string name;
  Tensor tensor;
};

// Bias-corrected Adam over a fixed parameter list. Gradients are read from
// each tensor's grad buffer; a step with all-zero gradients leaves the
// parameters unchanged.
class Adam {
 public:
  Adam(std::vector<AdamParam> params, AdamConfig cfg = {});

  // One update; throws a training error naming the parameter if any
  // gradient entry is non-finite.
  void step();

  int64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<AdamParam>& params() const { return params_; }

  // Moment buffers, exposed for checkpointing.
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(int64_t t, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  AdamConfig cfg_;
  std::vector<AdamParam> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int64_t t_ = 0;
};

}  // namespace dta
