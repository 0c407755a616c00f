#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "avgcn/tensor.hpp"

namespace avgcn::num {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode differentiation record.
///
/// Every operation appends one node holding its output value and a closure
/// that pushes the output gradient to its inputs. Nodes that do not depend on
/// a tracked leaf carry no closure and are skipped during backward().
class Tape {
 public:
  /// Receives the output gradient and adds contributions to the inputs.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A tracked input whose gradient is reported after backward().
  Var leaf(Tensor value);
  /// An untracked input; no gradient flows into it.
  Var constant(Tensor value);

  /// Records an op output. `tracked` says whether any input needs gradients.
  Var record(Tensor value, bool tracked, BackwardFn backward);

  bool tracked(Var v) const { return nodes_[v.id()].tracked; }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }

  /// Runs the reverse sweep from a single-element loss. May be called once.
  void backward(Var loss);

  /// Gradient of the last backward() loss with respect to v; zeros when v was
  /// not on the path to the loss.
  Tensor grad(Var v) const;

  /// Adds `delta` to the gradient slot of node `id` (used by op closures).
  void accumulate(std::size_t id, const Tensor& delta);
  /// Mutable gradient slot of node `id`, allocated on first use.
  Tensor& grad_slot(std::size_t id);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool tracked = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Differentiable operations. All inputs must live on the same tape.
// Shapes follow Tensor::rows()/cols(); outputs are rank-2.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// x (n x d) plus a 1 x d row broadcast over rows.
Var add_row(Var x, Var row);
/// x times a 1 x 1 scalar variable.
Var mul_scalar(Var x, Var s);
Var scale(Var x, double factor);
Var add_constant(Var x, double c);
Var neg(Var x);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
/// max(x, floor) elementwise; gradient passes only where x > floor.
Var clamp_min(Var x, double floor);

Var sum(Var x);
Var mean(Var x);
/// Per-row sum, n x 1.
Var row_sum(Var x);
/// Per-row Euclidean norm, n x 1. The gradient at a zero row is zero.
Var row_norm(Var x);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
/// Per-row log(sum(exp(.))), n x 1.
Var logsumexp_rows(Var x);

Var concat_cols(Var a, Var b);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var slice_rows(Var x, std::size_t start, std::size_t count);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Weights of one LSTM layer; gates are packed as [input, forget, cell, output].
struct LstmWeights {
  Var w_input;   // d_in x 4h
  Var w_hidden;  // h x 4h
  Var bias;      // 1 x 4h
};

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM step for a batch of rows: x is n x d_in, state rows are n x h.
LstmState lstm_cell(Var x, const LstmState& state, const LstmWeights& w);

}  // namespace avgcn::num
