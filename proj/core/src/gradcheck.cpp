#include "deskdta/gradcheck.hpp"

#include <cmath>

namespace dta {

namespace {
double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}
}  // namespace

double grad_check(const ScalarFn& f, Tensor x, double h) {
  if (h <= 0.0) fail(ErrorKind::Contract, "grad_check: h must be positive");
  x.set_requires_grad(true);

  std::vector<double> analytic;
  {
    Tape tape;
    tape.watch(x);
    Tensor loss = f(tape, x);
    tape.backward(loss);
    analytic = x.grad_copy();
  }

  double worst = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double keep = x.at(i);
    x.at(i) = keep + h;
    Tape tp(false);
    const double fp = f(tp, x).value();
    x.at(i) = keep - h;
    Tape tm(false);
    const double fm = f(tm, x).value();
    x.at(i) = keep;
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[static_cast<size_t>(i)], numeric));
  }
  return worst;
}

GradCheckReport grad_check_params(std::vector<GradCheckParam> params,
                                  const std::function<Tensor(Tape&)>& forward,
                                  const GradCheckOptions& opts) {
  if (opts.h <= 0.0) fail(ErrorKind::Contract, "grad_check: h must be positive");
  if (opts.stride < 1)
    fail(ErrorKind::Contract, "grad_check: stride must be at least 1");

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    for (auto& p : params) {
      p.tensor.set_requires_grad(true);
      tape.watch(p.tensor);
    }
    Tensor loss = forward(tape);
    tape.backward(loss);
    for (auto& p : params) analytic.push_back(p.tensor.grad_copy());
  }

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = params[pi].tensor;
    double param_worst = 0.0;
    for (int64_t i = 0; i < t.size(); i += opts.stride) {
      const double keep = t.at(i);
      t.at(i) = keep + opts.h;
      Tape tp(false);
      const double fp = forward(tp).value();
      t.at(i) = keep - opts.h;
      Tape tm(false);
      const double fm = forward(tm).value();
      t.at(i) = keep;
      const double numeric = (fp - fm) / (2.0 * opts.h);
      const double e = rel_err(analytic[pi][static_cast<size_t>(i)], numeric);
      param_worst = std::max(param_worst, e);
      ++report.entries_checked;
      if (e > report.max_rel_err) {
        report.max_rel_err = e;
        report.worst_param = params[pi].name;
        report.worst_index = i;
      }
    }
    report.per_param.emplace_back(params[pi].name, param_worst);
  }
  return report;
}

}  // namespace dta
