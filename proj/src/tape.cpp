#include "rnnbench/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnnbench/error.hpp"

namespace rnnbench::ad {

namespace {

void require_same_shape(std::string_view what, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  const double* in = a.data();
  double* o = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = f(in[i]);
  return out;
}

// out += a * b (a: n x k, b: k x m)
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T (a: n x m, b: k x m) -> n x k
void gemm_abt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += arow[j] * brow[j];
      out(i, p) += s;
    }
  }
}

// out += a^T * b (a: n x k, b: n x m) -> k x m
void gemm_atb_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* brow = b.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* orow = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConstant: return "constant";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSubtract: return "subtract";
    case Op::kHadamard: return "hadamard";
    case Op::kScale: return "scale";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kOneMinus: return "one_minus";
    case Op::kSign: return "sign";
    case Op::kMseLoss: return "mse_loss";
    case Op::kSum: return "sum";
    case Op::kRepeatRows: return "repeat_rows";
    case Op::kFitCols: return "fit_cols";
  }
  return "?";
}

void Tape::check_owner(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

Var Tape::push(Op op, std::initializer_list<Var> parents, Tensor value, double scalar) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite output from ") + std::string(op_name(op)) + " (" +
                       value.shape_string() + ")");
  }
  Node node;
  node.op = op;
  node.scalar = scalar;
  node.value = std::move(value);
  for (Var p : parents) {
    node.parents[node.arity++] = p.id;
    node.requires_grad = node.requires_grad || nodes_[p.id].requires_grad;
  }
  if (op == Op::kLeaf) node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

std::span<const std::size_t> Tape::parents(Var v) const {
  check_owner(v);
  const Node& n = nodes_[v.id];
  return {n.parents, n.arity};
}

Var Tape::leaf(Tensor value) { return push(Op::kLeaf, {}, std::move(value)); }

Var Tape::constant(Tensor value) { return push(Op::kConstant, {}, std::move(value)); }

Var Tape::matmul(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + av.shape_string() + " vs " +
                         bv.shape_string());
  }
  Tensor out(av.rows(), bv.cols());
  gemm_acc(av, bv, out);
  return push(Op::kMatMul, {a, b}, std::move(out));
}

Var Tape::add(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.same_shape(bv)) {
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return push(Op::kAdd, {a, b}, std::move(out));
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Tensor out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(r, c) + bv[c];
    return push(Op::kAdd, {a, b}, std::move(out));
  }
  throw DimensionError("add: shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
}

Var Tape::subtract(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape("subtract", av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return push(Op::kSubtract, {a, b}, std::move(out));
}

Var Tape::hadamard(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape("hadamard", av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return push(Op::kHadamard, {a, b}, std::move(out));
}

Var Tape::scale(Var a, double factor) {
  check_owner(a);
  return push(Op::kScale, {a}, map(value(a), [factor](double x) { return factor * x; }), factor);
}

Var Tape::sigmoid(Var a) {
  check_owner(a);
  return push(Op::kSigmoid, {a}, map(value(a), stable_sigmoid));
}

Var Tape::tanh(Var a) {
  check_owner(a);
  return push(Op::kTanh, {a}, map(value(a), [](double x) { return std::tanh(x); }));
}

Var Tape::relu(Var a) {
  check_owner(a);
  return push(Op::kRelu, {a}, map(value(a), [](double x) { return x > 0.0 ? x : 0.0; }));
}

Var Tape::one_minus(Var a) {
  check_owner(a);
  return push(Op::kOneMinus, {a}, map(value(a), [](double x) { return 1.0 - x; }));
}

Var Tape::sign(Var a) {
  check_owner(a);
  return push(Op::kSign, {a},
              map(value(a), [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
}

Var Tape::mse_loss(Var prediction, Var target) {
  check_owner(prediction);
  check_owner(target);
  const Tensor& p = value(prediction);
  const Tensor& t = value(target);
  require_same_shape("mse_loss", p, t);
  if (p.size() == 0) throw DimensionError("mse_loss: empty operands");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    s += d * d;
  }
  return push(Op::kMseLoss, {prediction, target},
              Tensor(1, 1, s / static_cast<double>(p.size())));
}

Var Tape::sum(Var a) {
  check_owner(a);
  double s = 0.0;
  for (double v : value(a).values()) s += v;
  return push(Op::kSum, {a}, Tensor(1, 1, s));
}

Var Tape::repeat_rows(Var row, std::size_t rows) {
  check_owner(row);
  const Tensor& rv = value(row);
  if (rv.rows() != 1) throw DimensionError("repeat_rows: expected a 1xC row, got " + rv.shape_string());
  Tensor out(rows, rv.cols());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(rv.data(), rv.data() + rv.cols(), out.data() + r * rv.cols());
  return push(Op::kRepeatRows, {row}, std::move(out));
}

Var Tape::fit_cols(Var a, std::size_t cols) {
  check_owner(a);
  const Tensor& av = value(a);
  if (av.cols() == cols) return a;
  Tensor out(av.rows(), cols);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (av.cols() == 1) {
        out(r, c) = av(r, 0);
      } else if (c < av.cols()) {
        out(r, c) = av(r, c);
      }
    }
  }
  return push(Op::kFitCols, {a}, std::move(out), static_cast<double>(cols));
}

void Tape::accumulate(std::size_t id, const Tensor& adjoint) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = adjoint;
    return;
  }
  for (std::size_t i = 0; i < adjoint.size(); ++i) n.grad[i] += adjoint[i];
}

void Tape::propagate(std::size_t id) {
  const Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const Tensor& y = n.value;
  auto parent_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.parents[k]].value; };
  auto parent_needs = [&](std::size_t k) { return nodes_[n.parents[k]].requires_grad; };

  switch (n.op) {
    case Op::kLeaf:
    case Op::kConstant:
      return;
    case Op::kMatMul: {
      const Tensor& a = parent_value(0);
      const Tensor& b = parent_value(1);
      if (parent_needs(0)) {
        Tensor da(a.rows(), a.cols());
        gemm_abt_acc(g, b, da);
        accumulate(n.parents[0], da);
      }
      if (parent_needs(1)) {
        Tensor db(b.rows(), b.cols());
        gemm_atb_acc(a, g, db);
        accumulate(n.parents[1], db);
      }
      return;
    }
    case Op::kAdd: {
      accumulate(n.parents[0], g);
      const Tensor& b = parent_value(1);
      if (!parent_needs(1)) return;
      if (b.same_shape(g)) {
        accumulate(n.parents[1], g);
      } else {
        Tensor db(1, b.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) db[c] += g(r, c);
        accumulate(n.parents[1], db);
      }
      return;
    }
    case Op::kSubtract: {
      accumulate(n.parents[0], g);
      if (parent_needs(1)) accumulate(n.parents[1], map(g, [](double x) { return -x; }));
      return;
    }
    case Op::kHadamard: {
      const Tensor& a = parent_value(0);
      const Tensor& b = parent_value(1);
      if (parent_needs(0)) {
        Tensor da(a.rows(), a.cols());
        for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[i] * b[i];
        accumulate(n.parents[0], da);
      }
      if (parent_needs(1)) {
        Tensor db(b.rows(), b.cols());
        for (std::size_t i = 0; i < db.size(); ++i) db[i] = g[i] * a[i];
        accumulate(n.parents[1], db);
      }
      return;
    }
    case Op::kScale: {
      const double f = n.scalar;
      accumulate(n.parents[0], map(g, [f](double x) { return f * x; }));
      return;
    }
    case Op::kSigmoid: {
      Tensor da(g.rows(), g.cols());
      for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[i] * y[i] * (1.0 - y[i]);
      accumulate(n.parents[0], da);
      return;
    }
    case Op::kTanh: {
      Tensor da(g.rows(), g.cols());
      for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[i] * (1.0 - y[i] * y[i]);
      accumulate(n.parents[0], da);
      return;
    }
    case Op::kRelu: {
      const Tensor& a = parent_value(0);
      Tensor da(g.rows(), g.cols());
      for (std::size_t i = 0; i < da.size(); ++i) da[i] = a[i] > 0.0 ? g[i] : 0.0;
      accumulate(n.parents[0], da);
      return;
    }
    case Op::kOneMinus:
      accumulate(n.parents[0], map(g, [](double x) { return -x; }));
      return;
    case Op::kSign:
      return;
    case Op::kMseLoss: {
      const Tensor& p = parent_value(0);
      const Tensor& t = parent_value(1);
      const double k = 2.0 * g[0] / static_cast<double>(p.size());
      Tensor dp(p.rows(), p.cols());
      for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = k * (p[i] - t[i]);
      if (parent_needs(1)) accumulate(n.parents[1], map(dp, [](double x) { return -x; }));
      accumulate(n.parents[0], dp);
      return;
    }
    case Op::kSum: {
      const Tensor& a = parent_value(0);
      accumulate(n.parents[0], Tensor(a.rows(), a.cols(), g[0]));
      return;
    }
    case Op::kRepeatRows: {
      Tensor da(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) da[c] += g(r, c);
      accumulate(n.parents[0], da);
      return;
    }
    case Op::kFitCols: {
      const Tensor& a = parent_value(0);
      Tensor da(a.rows(), a.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
          if (a.cols() == 1) {
            da(r, 0) += g(r, c);
          } else if (c < a.cols()) {
            da(r, c) += g(r, c);
          }
        }
      }
      accumulate(n.parents[0], da);
      return;
    }
  }
}

void Tape::backward(Var root) {
  check_owner(root);
  if (value(root).size() != 1) {
    throw ContractError("backward: root must be scalar, got " + value(root).shape_string());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = Tensor(1, 1, 1.0);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && !nodes_[i].grad.empty()) propagate(i);
  }
}

Tensor Tape::gradient(Var v) const {
  check_owner(v);
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

double grad_check(const TapeFunction& f, std::vector<Tensor>& params, double eps) {
  if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");

  auto evaluate = [&](bool with_backward, std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Tensor& p : params) leaves.push_back(tape.leaf(p));
    Var root = f(tape, leaves);
    const double out = tape.value(root)[0];
    if (with_backward) {
      tape.backward(root);
      for (Var l : leaves) grads->push_back(tape.gradient(l));
    }
    return out;
  };

  std::vector<Tensor> analytic;
  evaluate(true, &analytic);

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + eps;
      const double up = evaluate(false, nullptr);
      params[p][i] = saved - eps;
      const double down = evaluate(false, nullptr);
      params[p][i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p][i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace rnnbench::ad
