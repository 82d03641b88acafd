#include "deskdta/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <utility>

namespace dta {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data.assign(static_cast<size_t>(shape_numel(t.impl_->shape)), 0.0);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    fail(ErrorKind::Dimension,
         "tensor data length " + std::to_string(data.size()) +
             " does not match shape " + shape_str(shape));
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

const Shape& Tensor::shape() const { return impl_->shape; }
int64_t Tensor::size() const { return static_cast<int64_t>(impl_->data.size()); }

int64_t Tensor::rows() const {
  if (rank() != 2) fail(ErrorKind::Dimension, "rows(): tensor is not rank-2");
  return impl_->shape[0];
}
int64_t Tensor::cols() const {
  if (rank() != 2) fail(ErrorKind::Dimension, "cols(): tensor is not rank-2");
  return impl_->shape[1];
}

std::span<double> Tensor::data() const { return impl_->data; }

double& Tensor::at(int64_t i) const {
  return impl_->data[static_cast<size_t>(i)];
}
double& Tensor::at(int64_t i, int64_t j) const {
  return impl_->data[static_cast<size_t>(i * cols() + j)];
}

double Tensor::value() const {
  if (size() != 1)
    fail(ErrorKind::Contract,
         "value(): tensor " + shape_str(shape()) + " is not a scalar");
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
Tensor& Tensor::set_requires_grad(bool v) {
  impl_->requires_grad = v;
  return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<double> Tensor::grad() const {
  if (!has_grad()) fail(ErrorKind::Contract, "grad(): no gradient buffer");
  return impl_->grad;
}
std::vector<double> Tensor::grad_copy() const {
  auto g = grad();
  return std::vector<double>(g.begin(), g.end());
}

void Tensor::ensure_zero_grad() const {
  impl_->grad.assign(impl_->data.size(), 0.0);
}

int32_t Tensor::node_id() const { return impl_ ? impl_->node_id : -1; }
uint64_t Tensor::tape_serial() const { return impl_ ? impl_->tape_serial : 0; }

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::MatMul: return "matmul";
    case OpKind::Spmm: return "spmm";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddRowBias: return "add_row_bias";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::MaxOverRows: return "max_over_rows";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::SelectRow: return "select_row";
    case OpKind::Reshape: return "reshape";
    case OpKind::Transpose: return "transpose";
    case OpKind::EmbedRows: return "embed_rows";
    case OpKind::LayerNormRows: return "layer_norm_rows";
    case OpKind::Dropout: return "dropout";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Tape

namespace {
std::atomic<uint64_t> g_tape_serial{1};

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    fail(ErrorKind::Dimension, std::string(op) + ": expected rank-2 tensor, got " +
                                   shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    fail(ErrorKind::Dimension, std::string(op) + ": shape mismatch " +
                                   shape_str(a.shape()) + " vs " +
                                   shape_str(b.shape()));
}
}  // namespace

Tape::Tape(bool recording)
    : recording_(recording), serial_(g_tape_serial.fetch_add(1)) {}

int32_t Tape::ensure_on_tape(const Tensor& t) {
  auto* impl = t.impl_.get();
  if (impl->tape_serial != serial_) {
    impl->tape_serial = serial_;
    impl->node_id = next_id_++;
    if (impl->requires_grad) impl->grad.assign(impl->data.size(), 0.0);
  }
  return impl->node_id;
}

void Tape::watch(Tensor& t) { ensure_on_tape(t); }

Tensor Tape::make_output(Shape shape, bool requires_grad) {
  Tensor out = Tensor::zeros(std::move(shape), recording_ && requires_grad);
  return out;
}

void Tape::record(OpKind kind, std::vector<int32_t> inputs, int32_t output,
                  std::function<void()> fn) {
  nodes_.push_back(TapeNode{kind, std::move(inputs), output, std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1)
    fail(ErrorKind::Contract, "backward: loss " + shape_str(loss.shape()) +
                                  " is not a scalar");
  if (!loss.requires_grad() || loss.tape_serial() != serial_)
    fail(ErrorKind::Contract,
         "backward: loss was not produced by a recorded op on this tape");
  if (backward_done_)
    fail(ErrorKind::Contract, "backward: tape already replayed");
  backward_done_ = true;

  loss.impl_->grad.assign(1, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backward) it->backward();
  }
}

// Shared helper: record an op whose output already holds forward values.
// `fn` must accumulate (+=) into input gradients.
#define DTA_RECORD(kind, out, fn, ...)                                  \
  do {                                                                  \
    if (recording_ && out.requires_grad()) {                            \
      std::vector<int32_t> in_ids_;                                     \
      for (const Tensor* in_ : {__VA_ARGS__})                           \
        in_ids_.push_back(ensure_on_tape(*in_));                        \
      int32_t out_id_ = ensure_on_tape(out);                            \
      out.ensure_zero_grad();                                           \
      record(kind, std::move(in_ids_), out_id_, fn);                    \
    }                                                                   \
  } while (0)

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows())
    fail(ErrorKind::Dimension, "matmul: inner dimensions disagree, " +
                                   shape_str(a.shape()) + " x " +
                                   shape_str(b.shape()));
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_output({m, n}, grad_flows(a) || grad_flows(b));
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  // i-k-j order: each out[i][j] accumulates over ascending k, matching the
  // accumulation order of spmm so the dense/sparse paths agree bitwise.
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = ad + i * k;
    double* orow = od + i * n;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = bd + kk * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }

  auto fn = [a, b, out]() mutable {
    const int64_t m = a.rows(), k = a.cols(), n = b.cols();
    const auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      const auto bd = b.data();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t kk = 0; kk < k; ++kk) {
          double acc = 0.0;
          for (int64_t j = 0; j < n; ++j) acc += g[i * n + j] * bd[kk * n + j];
          ga[i * k + kk] += acc;
        }
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      const auto ad = a.data();
      for (int64_t kk = 0; kk < k; ++kk)
        for (int64_t i = 0; i < m; ++i) {
          const double av = ad[i * k + kk];
          if (av == 0.0) continue;
          for (int64_t j = 0; j < n; ++j)
            gb[kk * n + j] += av * g[i * n + j];
        }
    }
  };
  DTA_RECORD(OpKind::MatMul, out, fn, &a, &b);
  return out;
}

Tensor Tape::spmm(const SparseMatrix& s, const Tensor& d) {
  require_rank2(d, "spmm");
  if (s.cols() != d.rows())
    fail(ErrorKind::Dimension, "spmm: sparse [" + std::to_string(s.rows()) +
                                   "x" + std::to_string(s.cols()) +
                                   "] vs dense " + shape_str(d.shape()));
  const int64_t n = d.cols();
  Tensor out = make_output({s.rows(), n}, grad_flows(d));
  double* od = out.data().data();
  const double* dd = d.data().data();
  // Entries are sorted by (row, col): ascending-k accumulation per row.
  // Zero-valued entries are skipped to mirror matmul's zero skip, which
  // keeps the two paths bitwise identical even around signed zeros.
  for (const auto& e : s.entries()) {
    if (e.value == 0.0) continue;
    const double* drow = dd + e.col * n;
    double* orow = od + e.row * n;
    for (int64_t j = 0; j < n; ++j) orow[j] += e.value * drow[j];
  }

  const auto& entries = s.entries();
  auto fn = [entries, d, out]() mutable {
    if (!d.requires_grad()) return;
    const int64_t n = d.cols();
    auto gd = d.grad();
    const auto g = out.grad();
    for (const auto& e : entries)
      for (int64_t j = 0; j < n; ++j)
        gd[e.col * n + j] += e.value * g[e.row * n + j];
  };
  DTA_RECORD(OpKind::Spmm, out, fn, &d);
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_output(a.shape(), grad_flows(a) || grad_flows(b));
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) + b.at(i);
  auto fn = [a, b, out]() mutable {
    const auto g = out.grad();
    const int64_t n = out.size();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (int64_t i = 0; i < n; ++i) gb[i] += g[i];
    }
  };
  DTA_RECORD(OpKind::Add, out, fn, &a, &b);
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = make_output(a.shape(), grad_flows(a) || grad_flows(b));
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) - b.at(i);
  auto fn = [a, b, out]() mutable {
    const auto g = out.grad();
    const int64_t n = out.size();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (int64_t i = 0; i < n; ++i) gb[i] -= g[i];
    }
  };
  DTA_RECORD(OpKind::Sub, out, fn, &a, &b);
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_output(a.shape(), grad_flows(a) || grad_flows(b));
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * b.at(i);
  auto fn = [a, b, out]() mutable {
    const auto g = out.grad();
    const int64_t n = out.size();
    if (a.requires_grad()) {
      auto ga = a.grad();
      const auto bd = b.data();
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bd[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      const auto ad = a.data();
      for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * ad[i];
    }
  };
  DTA_RECORD(OpKind::Mul, out, fn, &a, &b);
  return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
  Tensor out = make_output(a.shape(), grad_flows(a));
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * c;
  auto fn = [a, out, c]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const auto g = out.grad();
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
  };
  DTA_RECORD(OpKind::Scale, out, fn, &a);
  return out;
}

Tensor Tape::add_row_bias(const Tensor& m, const Tensor& bias) {
  require_rank2(m, "add_row_bias");
  if (bias.rank() != 1 || bias.size() != m.cols())
    fail(ErrorKind::Dimension, "add_row_bias: matrix " + shape_str(m.shape()) +
                                   " vs bias " + shape_str(bias.shape()));
  Tensor out = make_output(m.shape(), grad_flows(m) || grad_flows(bias));
  const int64_t r = m.rows(), c = m.cols();
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(i, j) = m.at(i, j) + bias.at(j);
  auto fn = [m, bias, out]() mutable {
    const int64_t r = m.rows(), c = m.cols();
    const auto g = out.grad();
    if (m.requires_grad()) {
      auto gm = m.grad();
      for (int64_t i = 0; i < r * c; ++i) gm[i] += g[i];
    }
    if (bias.requires_grad()) {
      auto gb = bias.grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
    }
  };
  DTA_RECORD(OpKind::AddRowBias, out, fn, &m, &bias);
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  Tensor out = make_output(a.shape(), grad_flows(a));
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) > 0.0 ? a.at(i) : 0.0;
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const auto ad = a.data();
    const auto g = out.grad();
    const int64_t n = out.size();
    // subgradient 0 at exactly 0
    for (int64_t i = 0; i < n; ++i)
      if (ad[i] > 0.0) ga[i] += g[i];
  };
  DTA_RECORD(OpKind::Relu, out, fn, &a);
  return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
  Tensor out = make_output(a.shape(), grad_flows(a));
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = 1.0 / (1.0 + std::exp(-a.at(i)));
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const auto y = out.data();
    const auto g = out.grad();
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  };
  DTA_RECORD(OpKind::Sigmoid, out, fn, &a);
  return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  require_rank2(a, "softmax_rows");
  const int64_t r = a.rows(), c = a.cols();
  Tensor out = make_output(a.shape(), grad_flows(a));
  for (int64_t i = 0; i < r; ++i) {
    double mx = a.at(i, 0);
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, a.at(i, j));
    double denom = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      const double e = std::exp(a.at(i, j) - mx);
      out.at(i, j) = e;
      denom += e;
    }
    for (int64_t j = 0; j < c; ++j) out.at(i, j) /= denom;
  }
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    const int64_t r = a.rows(), c = a.cols();
    auto ga = a.grad();
    const auto y = out.data();
    const auto g = out.grad();
    for (int64_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
      for (int64_t j = 0; j < c; ++j)
        ga[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
    }
  };
  DTA_RECORD(OpKind::SoftmaxRows, out, fn, &a);
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  if (a.size() == 0) fail(ErrorKind::Domain, "sum: empty tensor");
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a.at(i);
  Tensor out = make_output({1}, grad_flows(a));
  out.at(0) = acc;
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const double g = out.grad()[0];
    for (int64_t i = 0; i < a.size(); ++i) ga[i] += g;
  };
  DTA_RECORD(OpKind::Sum, out, fn, &a);
  return out;
}

Tensor Tape::mean(const Tensor& a) {
  if (a.size() == 0) fail(ErrorKind::Domain, "mean: empty tensor");
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a.at(i);
  Tensor out = make_output({1}, grad_flows(a));
  out.at(0) = acc / static_cast<double>(a.size());
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const double g = out.grad()[0] / static_cast<double>(a.size());
    for (int64_t i = 0; i < a.size(); ++i) ga[i] += g;
  };
  DTA_RECORD(OpKind::Mean, out, fn, &a);
  return out;
}

Tensor Tape::max_over_rows(const Tensor& a) {
  require_rank2(a, "max_over_rows");
  const int64_t r = a.rows(), c = a.cols();
  if (r == 0 || c == 0) fail(ErrorKind::Domain, "max_over_rows: empty tensor");
  Tensor out = make_output({c}, grad_flows(a));
  auto argmax = std::make_shared<std::vector<int64_t>>(c, 0);
  for (int64_t j = 0; j < c; ++j) {
    double best = a.at(0, j);
    int64_t bi = 0;
    // ties break to the lowest row index
    for (int64_t i = 1; i < r; ++i)
      if (a.at(i, j) > best) {
        best = a.at(i, j);
        bi = i;
      }
    out.at(j) = best;
    (*argmax)[j] = bi;
  }
  auto fn = [a, out, argmax]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const auto g = out.grad();
    const int64_t c = a.cols();
    for (int64_t j = 0; j < c; ++j) ga[(*argmax)[j] * c + j] += g[j];
  };
  DTA_RECORD(OpKind::MaxOverRows, out, fn, &a);
  return out;
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) fail(ErrorKind::Dimension, "concat_cols: no parts");
  const int64_t rk = parts.front().rank();
  if (rk != 1 && rk != 2)
    fail(ErrorKind::Dimension, "concat_cols: parts must be rank-1 or rank-2");
  bool rg = false;
  int64_t total = 0;
  const int64_t m = rk == 2 ? parts.front().rows() : 1;
  for (const auto& p : parts) {
    if (p.rank() != rk)
      fail(ErrorKind::Dimension, "concat_cols: mixed ranks");
    if (rk == 2 && p.rows() != m)
      fail(ErrorKind::Dimension,
           "concat_cols: row mismatch, " + std::to_string(m) + " vs " +
               std::to_string(p.rows()));
    total += rk == 2 ? p.cols() : p.size();
    rg = rg || grad_flows(p);
  }
  Shape oshape = rk == 2 ? Shape{m, total} : Shape{total};
  Tensor out = make_output(std::move(oshape), rg);
  auto offsets = std::make_shared<std::vector<int64_t>>();
  int64_t off = 0;
  for (const auto& p : parts) {
    const int64_t w = rk == 2 ? p.cols() : p.size();
    offsets->push_back(off);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < w; ++j)
        out.at(i * total + off + j) = p.at(i * w + j);
    off += w;
  }
  std::vector<Tensor> held(parts.begin(), parts.end());
  auto fn = [held, out, offsets, total, m, rk]() mutable {
    for (size_t pi = 0; pi < held.size(); ++pi) {
      Tensor& p = held[pi];
      if (!p.requires_grad()) continue;
      const int64_t w = rk == 2 ? p.cols() : p.size();
      const int64_t off = (*offsets)[pi];
      auto gp = p.grad();
      const auto g = out.grad();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < w; ++j)
          gp[i * w + j] += g[i * total + off + j];
    }
  };
  if (recording_ && out.requires_grad()) {
    std::vector<int32_t> ids;
    for (const auto& p : parts) ids.push_back(ensure_on_tape(p));
    int32_t oid = ensure_on_tape(out);
    out.ensure_zero_grad();
    record(OpKind::ConcatCols, std::move(ids), oid, fn);
  }
  return out;
}

Tensor Tape::concat_cols(std::initializer_list<Tensor> parts) {
  std::vector<Tensor> v(parts);
  return concat_cols(std::span<const Tensor>(v));
}

Tensor Tape::slice_rows(const Tensor& a, int64_t start, int64_t len) {
  require_rank2(a, "slice_rows");
  if (start < 0 || len <= 0 || start + len > a.rows())
    fail(ErrorKind::Dimension, "slice_rows: range [" + std::to_string(start) +
                                   ", +" + std::to_string(len) +
                                   ") out of " + std::to_string(a.rows()));
  const int64_t c = a.cols();
  Tensor out = make_output({len, c}, grad_flows(a));
  std::memcpy(out.data().data(), a.data().data() + start * c,
              static_cast<size_t>(len * c) * sizeof(double));
  auto fn = [a, out, start]() mutable {
    if (!a.requires_grad()) return;
    const int64_t c = a.cols(), len = out.rows();
    auto ga = a.grad();
    const auto g = out.grad();
    for (int64_t i = 0; i < len * c; ++i) ga[start * c + i] += g[i];
  };
  DTA_RECORD(OpKind::SliceRows, out, fn, &a);
  return out;
}

Tensor Tape::slice_cols(const Tensor& a, int64_t start, int64_t len) {
  require_rank2(a, "slice_cols");
  if (start < 0 || len <= 0 || start + len > a.cols())
    fail(ErrorKind::Dimension, "slice_cols: range [" + std::to_string(start) +
                                   ", +" + std::to_string(len) +
                                   ") out of " + std::to_string(a.cols()));
  const int64_t r = a.rows(), c = a.cols();
  Tensor out = make_output({r, len}, grad_flows(a));
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < len; ++j) out.at(i, j) = a.at(i, start + j);
  auto fn = [a, out, start, len]() mutable {
    if (!a.requires_grad()) return;
    const int64_t r = a.rows(), c = a.cols();
    auto ga = a.grad();
    const auto g = out.grad();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < len; ++j)
        ga[i * c + start + j] += g[i * len + j];
  };
  DTA_RECORD(OpKind::SliceCols, out, fn, &a);
  return out;
}

Tensor Tape::select_row(const Tensor& a, int64_t row) {
  require_rank2(a, "select_row");
  if (row < 0 || row >= a.rows())
    fail(ErrorKind::Dimension,
         "select_row: row " + std::to_string(row) + " out of " +
             std::to_string(a.rows()));
  const int64_t c = a.cols();
  Tensor out = make_output({c}, grad_flows(a));
  std::memcpy(out.data().data(), a.data().data() + row * c,
              static_cast<size_t>(c) * sizeof(double));
  auto fn = [a, out, row]() mutable {
    if (!a.requires_grad()) return;
    const int64_t c = a.cols();
    auto ga = a.grad();
    const auto g = out.grad();
    for (int64_t j = 0; j < c; ++j) ga[row * c + j] += g[j];
  };
  DTA_RECORD(OpKind::SelectRow, out, fn, &a);
  return out;
}

Tensor Tape::reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size())
    fail(ErrorKind::Dimension, "reshape: " + shape_str(a.shape()) + " -> " +
                                   shape_str(shape) + " changes element count");
  Tensor out = make_output(std::move(shape), grad_flows(a));
  std::memcpy(out.data().data(), a.data().data(),
              static_cast<size_t>(a.size()) * sizeof(double));
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    auto ga = a.grad();
    const auto g = out.grad();
    for (int64_t i = 0; i < a.size(); ++i) ga[i] += g[i];
  };
  DTA_RECORD(OpKind::Reshape, out, fn, &a);
  return out;
}

Tensor Tape::transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const int64_t r = a.rows(), c = a.cols();
  Tensor out = make_output({c, r}, grad_flows(a));
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(j, i) = a.at(i, j);
  auto fn = [a, out]() mutable {
    if (!a.requires_grad()) return;
    const int64_t r = a.rows(), c = a.cols();
    auto ga = a.grad();
    const auto g = out.grad();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  };
  DTA_RECORD(OpKind::Transpose, out, fn, &a);
  return out;
}

Tensor Tape::embed_rows(const Tensor& table, std::span<const int32_t> ids) {
  require_rank2(table, "embed_rows");
  const int64_t v = table.rows(), d = table.cols();
  for (int32_t id : ids)
    if (id < 0 || id >= v)
      fail(ErrorKind::Dimension,
           "embed_rows: id " + std::to_string(id) + " out of vocabulary " +
               std::to_string(v));
  const int64_t L = static_cast<int64_t>(ids.size());
  if (L == 0) fail(ErrorKind::Dimension, "embed_rows: empty id list");
  Tensor out = make_output({L, d}, grad_flows(table));
  for (int64_t i = 0; i < L; ++i)
    std::memcpy(out.data().data() + i * d, table.data().data() + ids[i] * d,
                static_cast<size_t>(d) * sizeof(double));
  auto held = std::make_shared<std::vector<int32_t>>(ids.begin(), ids.end());
  auto fn = [table, out, held]() mutable {
    if (!table.requires_grad()) return;
    const int64_t d = table.cols();
    auto gt = table.grad();
    const auto g = out.grad();
    for (size_t i = 0; i < held->size(); ++i)
      for (int64_t j = 0; j < d; ++j)
        gt[(*held)[i] * d + j] += g[static_cast<int64_t>(i) * d + j];
  };
  DTA_RECORD(OpKind::EmbedRows, out, fn, &table);
  return out;
}

Tensor Tape::layer_norm_rows(const Tensor& x, const Tensor& gamma,
                             const Tensor& beta, double eps) {
  require_rank2(x, "layer_norm_rows");
  const int64_t r = x.rows(), c = x.cols();
  if (gamma.size() != c || beta.size() != c)
    fail(ErrorKind::Dimension, "layer_norm_rows: scale/shift width " +
                                   shape_str(gamma.shape()) + "/" +
                                   shape_str(beta.shape()) + " vs " +
                                   std::to_string(c));
  Tensor out = make_output(
      {r, c}, grad_flows(x) || grad_flows(gamma) || grad_flows(beta));
  auto inv_std = std::make_shared<std::vector<double>>(r);
  auto xhat = std::make_shared<std::vector<double>>(r * c);
  for (int64_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (int64_t j = 0; j < c; ++j) mu += x.at(i, j);
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      const double dlt = x.at(i, j) - mu;
      var += dlt * dlt;
    }
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (int64_t j = 0; j < c; ++j) {
      const double xh = (x.at(i, j) - mu) * is;
      (*xhat)[i * c + j] = xh;
      out.at(i, j) = xh * gamma.at(j) + beta.at(j);
    }
  }
  auto fn = [x, gamma, beta, out, inv_std, xhat]() mutable {
    const int64_t r = x.rows(), c = x.cols();
    const auto g = out.grad();
    if (gamma.requires_grad()) {
      auto gg = gamma.grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j)
          gg[j] += g[i * c + j] * (*xhat)[i * c + j];
    }
    if (beta.requires_grad()) {
      auto gb = beta.grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
    }
    if (x.requires_grad()) {
      auto gx = x.grad();
      const auto gm = gamma.data();
      for (int64_t i = 0; i < r; ++i) {
        double sum_dxh = 0.0, sum_dxh_xh = 0.0;
        for (int64_t j = 0; j < c; ++j) {
          const double dxh = g[i * c + j] * gm[j];
          sum_dxh += dxh;
          sum_dxh_xh += dxh * (*xhat)[i * c + j];
        }
        const double is = (*inv_std)[i];
        const double invc = 1.0 / static_cast<double>(c);
        for (int64_t j = 0; j < c; ++j) {
          const double dxh = g[i * c + j] * gm[j];
          gx[i * c + j] +=
              is * (dxh - invc * sum_dxh - (*xhat)[i * c + j] * invc * sum_dxh_xh);
        }
      }
    }
  };
  DTA_RECORD(OpKind::LayerNormRows, out, fn, &x, &gamma, &beta);
  return out;
}

Tensor Tape::dropout(const Tensor& x, double rate, DropoutCtx& ctx) {
  if (rate < 0.0 || rate >= 1.0)
    fail(ErrorKind::Contract, "dropout: rate must be in [0, 1)");
  if (!ctx.enabled || rate == 0.0) return x;
  const int64_t n = x.size();
  auto mask = std::make_shared<std::vector<double>>(n);
  Rng rng(ctx.seed, fnv1a64("dropout") ^ mix64(ctx.step));
  // skip draws already consumed by earlier calls in this forward pass
  for (uint64_t i = 0; i < ctx.draws; ++i) rng.next_u64();
  const double keep = 1.0 - rate;
  for (int64_t i = 0; i < n; ++i)
    (*mask)[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  ctx.draws += static_cast<uint64_t>(n);
  Tensor out = make_output(x.shape(), grad_flows(x));
  for (int64_t i = 0; i < n; ++i) out.at(i) = x.at(i) * (*mask)[i];
  auto fn = [x, out, mask]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    const auto g = out.grad();
    for (int64_t i = 0; i < x.size(); ++i) gx[i] += g[i] * (*mask)[i];
  };
  DTA_RECORD(OpKind::Dropout, out, fn, &x);
  return out;
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.grad()) g *= s;
    }
  }
  return norm;
}

}  // namespace dta
