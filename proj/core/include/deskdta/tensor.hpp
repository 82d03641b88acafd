#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "deskdta/common.hpp"
#include "deskdta/sparse.hpp"

namespace dta {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense 64-bit tensor. A Tensor is a cheap handle onto shared storage;
// the autograd tape captures these handles, so data referenced by a
// recorded operation stays alive for the lifetime of its Tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int64_t rank() const { return static_cast<int64_t>(shape().size()); }
  int64_t size() const;
  int64_t rows() const;  // rank-2 only
  int64_t cols() const;  // rank-2 only

  // A Tensor has pointer semantics: const methods hand out mutable views
  // of the shared storage, mirroring how copies alias the same buffer.
  std::span<double> data() const;
  double& at(int64_t i) const;
  double& at(int64_t i, int64_t j) const;
  // Scalar extraction; Contract error unless size() == 1.
  double value() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool v);

  bool has_grad() const;
  std::span<double> grad() const;
  std::vector<double> grad_copy() const;
  void ensure_zero_grad() const;  // allocate (or clear) the gradient buffer

  // Tape bookkeeping: node ids are unique within the owning tape.
  int32_t node_id() const;
  uint64_t tape_serial() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until needed
    bool requires_grad = false;
    uint64_t tape_serial = 0;  // serial of the tape that owns node_id
    int32_t node_id = -1;
  };
  std::shared_ptr<Impl> impl_;
};

enum class OpKind : uint8_t {
  MatMul,
  Spmm,
  Add,
  Sub,
  Mul,
  Scale,
  AddRowBias,
  Relu,
  Sigmoid,
  SoftmaxRows,
  Sum,
  Mean,
  MaxOverRows,
  ConcatCols,
  SliceRows,
  SliceCols,
  SelectRow,
  Reshape,
  Transpose,
  EmbedRows,
  LayerNormRows,
  Dropout,
};

const char* op_kind_name(OpKind k);

struct TapeNode {
  OpKind kind;
  std::vector<int32_t> inputs;
  int32_t output;
  std::function<void()> backward;
};

// Deterministic dropout context. Masks are a pure function of
// (seed, step, draw index), so re-evaluating the same forward pass —
// e.g. for finite differences — reproduces identical masks.
struct DropoutCtx {
  bool enabled = false;
  uint64_t seed = 0;
  uint64_t step = 0;
  uint64_t draws = 0;  // advanced per sampled mask entry
};

// Reverse-mode tape. Single-threaded; append-only; one backward pass per
// tape. Construct with recording=false for inference-only evaluation
// (ops compute forward values but record nothing).
class Tape {
 public:
  explicit Tape(bool recording = true);

  bool recording() const { return recording_; }
  uint64_t serial() const { return serial_; }
  size_t node_count() const { return nodes_.size(); }
  const TapeNode& node(size_t i) const { return nodes_.at(i); }

  // Register a leaf (typically a parameter): assigns a node id and
  // zero-initialises its gradient buffer when it requires grad.
  void watch(Tensor& t);

  // --- arithmetic ---
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor spmm(const SparseMatrix& s, const Tensor& d);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  Tensor add_row_bias(const Tensor& m, const Tensor& bias);

  // --- nonlinearities ---
  Tensor relu(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor softmax_rows(const Tensor& a);

  // --- reductions ---
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  Tensor max_over_rows(const Tensor& a);

  // --- structure ---
  Tensor concat_cols(std::span<const Tensor> parts);
  Tensor concat_cols(std::initializer_list<Tensor> parts);
  Tensor slice_rows(const Tensor& a, int64_t start, int64_t len);
  Tensor slice_cols(const Tensor& a, int64_t start, int64_t len);
  Tensor select_row(const Tensor& a, int64_t row);  // rank-2 -> rank-1
  Tensor reshape(const Tensor& a, Shape shape);
  Tensor transpose(const Tensor& a);
  Tensor embed_rows(const Tensor& table, std::span<const int32_t> ids);

  // --- composites with fused backward ---
  Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, double eps);
  Tensor dropout(const Tensor& x, double rate, DropoutCtx& ctx);

  // Populates gradients of every requires_grad tensor reachable from
  // `loss`; watched-but-unreachable tensors keep zero gradients.
  void backward(const Tensor& loss);

 private:
  int32_t ensure_on_tape(const Tensor& t);
  Tensor make_output(Shape shape, bool requires_grad);
  void record(OpKind kind, std::vector<int32_t> inputs, int32_t output,
              std::function<void()> fn);
  static bool grad_flows(const Tensor& t) { return t.requires_grad(); }

  bool recording_;
  uint64_t serial_;
  int32_t next_id_ = 0;
  bool backward_done_ = false;
  std::vector<TapeNode> nodes_;
};

// Global-norm gradient clipping; returns the pre-clip norm.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

}  // namespace dta
