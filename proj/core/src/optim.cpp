#include "deskdta/optim.hpp"

#include <cmath>

namespace dta {

Adam::Adam(std::vector<AdamParam> params, AdamConfig cfg)
    : cfg_(cfg), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (auto& p : params_) {
    const size_t n = static_cast<size_t>(p.tensor.size());
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi].tensor;
    if (!p.has_grad())
      fail(ErrorKind::Contract,
           "adam: parameter " + params_[pi].name + " has no gradient buffer");
    auto g = p.grad();
    auto d = p.data();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < m.size(); ++i) {
      if (!std::isfinite(g[i]))
        fail(ErrorKind::Training,
             "non-finite gradient in parameter " + params_[pi].name +
                 " at entry " + std::to_string(i));
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      d[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::restore(int64_t t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    fail(ErrorKind::Contract, "adam restore: moment list length mismatch");
  for (size_t i = 0; i < params_.size(); ++i)
    if (m[i].size() != static_cast<size_t>(params_[i].tensor.size()) ||
        v[i].size() != static_cast<size_t>(params_[i].tensor.size()))
      fail(ErrorKind::Contract,
           "adam restore: moment size mismatch for " + params_[i].name);
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace dta
