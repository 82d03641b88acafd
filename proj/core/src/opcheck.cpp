#include "deskdta/opcheck.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <utility>

#include "deskdta/common.hpp"
#include "deskdta/gradcheck.hpp"
#include "deskdta/sparse.hpp"
#include "deskdta/tensor.hpp"

namespace dta {

namespace {

Tensor seeded(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[static_cast<size_t>(i)] = rng.uniform(lo, hi);
  return t;
}

// Magnitudes in [0.3, 1] with random sign, so no entry sits within the
// finite-difference step of the relu kink.
Tensor seeded_off_zero(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (int64_t i = 0; i < t.size(); ++i) {
    double mag = rng.uniform(0.3, 1.0);
    t.data()[static_cast<size_t>(i)] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

using Fwd = std::function<Tensor(Tape&)>;

OpCheckRow run(const char* op, std::vector<GradCheckParam> params, const Fwd& fwd) {
  GradCheckReport r = grad_check_params(std::move(params), fwd);
  return {op, r.max_rel_err, r.entries_checked};
}

}  // namespace

std::vector<OpCheckRow> check_all_ops(uint64_t seed) {
  std::vector<OpCheckRow> rows;
  Rng rng(seed, "opcheck");

  {
    Tensor a = seeded({3, 4}, rng), b = seeded({4, 2}, rng);
    rows.push_back(run("matmul", {{"a", a}, {"b", b}}, [&](Tape& t) {
      return t.sum(t.matmul(a, b));
    }));
  }
  {
    SparseMatrix s(4, 4,
                   {{0, 0, 0.5}, {0, 2, -0.7}, {1, 1, 1.25}, {2, 0, 0.3},
                    {2, 3, -0.4}, {3, 2, 0.9}});
    Tensor d = seeded({4, 3}, rng);
    rows.push_back(run("spmm", {{"d", d}},
                       [&](Tape& t) { return t.sum(t.spmm(s, d)); }));
  }
  {
    Tensor a = seeded({3, 3}, rng), b = seeded({3, 3}, rng);
    rows.push_back(run("add", {{"a", a}, {"b", b}},
                       [&](Tape& t) { return t.sum(t.mul(t.add(a, b), t.add(a, b))); }));
  }
  {
    Tensor a = seeded({3, 3}, rng), b = seeded({3, 3}, rng);
    rows.push_back(run("sub", {{"a", a}, {"b", b}},
                       [&](Tape& t) { return t.sum(t.mul(t.sub(a, b), t.sub(a, b))); }));
  }
  {
    Tensor a = seeded({3, 3}, rng), b = seeded({3, 3}, rng);
    rows.push_back(run("mul", {{"a", a}, {"b", b}},
                       [&](Tape& t) { return t.sum(t.mul(a, b)); }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    rows.push_back(run("scale", {{"a", a}},
                       [&](Tape& t) { return t.sum(t.mul(t.scale(a, 1.7), a)); }));
  }
  {
    Tensor m = seeded({3, 4}, rng), bias = seeded({4}, rng);
    rows.push_back(run("add_row_bias", {{"m", m}, {"bias", bias}}, [&](Tape& t) {
      Tensor y = t.add_row_bias(m, bias);
      return t.sum(t.mul(y, y));
    }));
  }
  {
    Tensor a = seeded_off_zero({3, 4}, rng);
    rows.push_back(run("relu", {{"a", a}},
                       [&](Tape& t) { return t.sum(t.relu(a)); }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    rows.push_back(run("sigmoid", {{"a", a}},
                       [&](Tape& t) { return t.sum(t.sigmoid(a)); }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    Tensor w = seeded({3, 4}, rng);
    rows.push_back(run("softmax_rows", {{"a", a}}, [&](Tape& t) {
      return t.sum(t.mul(t.softmax_rows(a), w));
    }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    rows.push_back(run("sum", {{"a", a}}, [&](Tape& t) {
      Tensor s = t.sum(a);
      return t.mul(s, s);
    }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    rows.push_back(run("mean", {{"a", a}}, [&](Tape& t) {
      Tensor m = t.mean(a);
      return t.mul(m, m);
    }));
  }
  {
    // seeded uniforms keep column maxima separated by far more than the
    // finite-difference step, so the max stays on one entry per probe
    Tensor a = seeded({5, 3}, rng);
    rows.push_back(run("max_over_rows", {{"a", a}}, [&](Tape& t) {
      Tensor m = t.max_over_rows(a);
      return t.sum(t.mul(m, m));
    }));
  }
  {
    Tensor a = seeded({2, 2}, rng), b = seeded({2, 3}, rng);
    rows.push_back(run("concat_cols", {{"a", a}, {"b", b}}, [&](Tape& t) {
      Tensor c = t.concat_cols({a, b});
      return t.sum(t.mul(c, c));
    }));
  }
  {
    Tensor a = seeded({5, 3}, rng);
    rows.push_back(run("slice_rows", {{"a", a}}, [&](Tape& t) {
      Tensor s = t.slice_rows(a, 1, 3);
      return t.sum(t.mul(s, s));
    }));
  }
  {
    Tensor a = seeded({3, 6}, rng);
    rows.push_back(run("slice_cols", {{"a", a}}, [&](Tape& t) {
      Tensor s = t.slice_cols(a, 2, 3);
      return t.sum(t.mul(s, s));
    }));
  }
  {
    Tensor a = seeded({4, 3}, rng);
    rows.push_back(run("select_row", {{"a", a}}, [&](Tape& t) {
      Tensor r = t.select_row(a, 2);
      return t.sum(t.mul(r, r));
    }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    rows.push_back(run("reshape", {{"a", a}}, [&](Tape& t) {
      Tensor r = t.reshape(a, {12});
      return t.sum(t.mul(r, r));
    }));
  }
  {
    Tensor a = seeded({3, 4}, rng);
    rows.push_back(run("transpose", {{"a", a}}, [&](Tape& t) {
      Tensor tr = t.transpose(a);
      return t.sum(t.mul(tr, tr));
    }));
  }
  {
    Tensor table = seeded({6, 4}, rng);
    static const std::array<int32_t, 4> ids = {1, 3, 3, 0};  // repeat accumulates
    rows.push_back(run("embed_rows", {{"table", table}}, [&](Tape& t) {
      Tensor e = t.embed_rows(table, ids);
      return t.sum(t.mul(e, e));
    }));
  }
  {
    Tensor x = seeded({3, 4}, rng);
    Tensor gamma = seeded({4}, rng, 0.5, 1.5), beta = seeded({4}, rng);
    rows.push_back(run("layer_norm_rows", {{"x", x}, {"gamma", gamma}, {"beta", beta}},
                       [&](Tape& t) {
                         Tensor y = t.layer_norm_rows(x, gamma, beta, 1e-5);
                         return t.sum(t.mul(y, y));
                       }));
  }
  {
    Tensor x = seeded({4, 4}, rng);
    rows.push_back(run("dropout", {{"x", x}}, [&](Tape& t) {
      // fresh context per evaluation so every probe sees the same mask
      DropoutCtx ctx{true, 99, 1, 0};
      Tensor y = t.dropout(x, 0.5, ctx);
      return t.sum(t.mul(y, y));
    }));
  }

  return rows;
}

}  // namespace dta
