#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation as a node holding its forward value. Nodes
// only reference earlier nodes, so a single reverse sweep from the root
// visits each node after all of its consumers and produces exact adjoints.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "rnnbench/tensor.hpp"

namespace rnnbench::ad {

enum class Op {
  kLeaf,
  kConstant,
  kMatMul,
  kAdd,
  kSubtract,
  kHadamard,
  kScale,
  kSigmoid,
  kTanh,
  kRelu,
  kOneMinus,
  kSign,
  kMseLoss,
  kSum,
  kRepeatRows,
  kFitCols,
};

std::string_view op_name(Op op);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input; backward() fills its gradient.
  Var leaf(Tensor value);
  /// Non-differentiable input; nothing is propagated into it.
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  /// Elementwise a + b. `b` may be a 1xC row added to every row of an RxC `a`.
  Var add(Var a, Var b);
  Var subtract(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double factor);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var one_minus(Var a);
  /// Derivative is 0 everywhere. Only used by data generators, never trained through.
  Var sign(Var a);
  /// Mean of squared differences, as a 1x1 node.
  Var mse_loss(Var prediction, Var target);
  Var sum(Var a);
  /// Stacks a 1xC row `rows` times.
  Var repeat_rows(Var row, std::size_t rows);
  /// Width adapter: identity if widths match, broadcast if `a` has one column,
  /// otherwise zero-pad or truncate columns.
  Var fit_cols(Var a, std::size_t cols);

  /// Reverse sweep from a 1x1 root. Previous gradients are discarded.
  void backward(Var root);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  /// d(root)/d(v) after backward(); zeros when v is unreachable from the root.
  Tensor gradient(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const { return nodes_[v.id].op; }
  std::span<const std::size_t> parents(Var v) const;

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t parents[2] = {0, 0};
    std::size_t arity = 0;
    bool requires_grad = false;
    double scalar = 0.0;
    Tensor value;
    Tensor grad;
  };

  Var push(Op op, std::initializer_list<Var> parents, Tensor value, double scalar = 0.0);
  void check_owner(Var v) const;
  void accumulate(std::size_t id, const Tensor& adjoint);
  void propagate(std::size_t id);

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

inline Var matmul(Var a, Var b) { return a.tape->matmul(a, b); }
inline Var hadamard(Var a, Var b) { return a.tape->hadamard(a, b); }
inline Var sigmoid(Var a) { return a.tape->sigmoid(a); }
inline Var tanh(Var a) { return a.tape->tanh(a); }
inline Var relu(Var a) { return a.tape->relu(a); }
inline Var one_minus(Var a) { return a.tape->one_minus(a); }
inline Var sign(Var a) { return a.tape->sign(a); }
inline Var scale(Var a, double factor) { return a.tape->scale(a, factor); }
inline Var sum(Var a) { return a.tape->sum(a); }
inline Var mse_loss(Var p, Var t) { return p.tape->mse_loss(p, t); }
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->subtract(a, b); }

/// Builds a scalar loss on a fresh tape from leaves bound to `params`.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Central-difference check of every coordinate of every tensor in `params`.
/// Returns max |analytic - numeric| / max(1, |analytic|, |numeric|).
/// `params` is perturbed in place and restored before returning.
double grad_check(const TapeFunction& f, std::vector<Tensor>& params, double eps = 1e-5);

}  // namespace rnnbench::ad
