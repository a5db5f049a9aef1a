#pragma once
// Minimal reverse-mode autodiff over dense Eigen matrices.  A Graph is a
// tape: ops append nodes holding the forward value and a backward closure
// that scatters the node's gradient into its inputs.  Templated on the
// scalar so training runs in float32 (checkpoints round-trip bit-exact)
// while gradient checking runs the same code in float64.
//
// Conventions: everything is a dynamic matrix; "scalars" are 1x1.  Leaves
// either own their value or alias caller storage (leaf_ref) so binding a
// multi-hundred-MB parameter set costs nothing.  Gradients accumulate
// lazily; nodes built while grads are disabled (or from grad-free inputs)
// carry no closure and cost only the forward math.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "zsmstm/errors.hpp"

namespace zsmstm {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct Val {
  int32_t i = -1;
  bool valid() const { return i >= 0; }
};

template <typename S>
class Graph {
 public:
  using M = Mat<S>;

  explicit Graph(bool enable_grad = true) : grad_enabled_(enable_grad) {}

  void reserve(size_t n) { nodes_.reserve(n); }
  size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

  // ---- leaves ---------------------------------------------------------------

  Val leaf(M v, bool requires_grad = false) {
    return push(std::move(v), requires_grad && grad_enabled_, {});
  }

  // aliases caller-owned storage; caller must outlive the graph
  Val leaf_ref(const M* v, bool requires_grad) {
    Node n;
    n.ref = v;
    n.requires_grad = requires_grad && grad_enabled_;
    nodes_.push_back(std::move(n));
    return {int32_t(nodes_.size() - 1)};
  }

  Val scalar(S v) {
    M m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m), false);
  }

  // ---- access ---------------------------------------------------------------

  const M& value(Val v) const {
    const Node& n = node(v);
    return n.ref ? *n.ref : n.value;
  }

  S scalar_value(Val v) const {
    const M& m = value(v);
    check(m.rows() == 1 && m.cols() == 1, Err::dimension_mismatch, "expected a 1x1 node");
    return m(0, 0);
  }

  bool has_grad(Val v) const { return node(v).grad.size() > 0; }

  // gradient with zeros when the node never received one
  M grad(Val v) const {
    const Node& n = node(v);
    if (n.grad.size() > 0) return n.grad;
    const M& val = n.ref ? *n.ref : n.value;
    return M::Zero(val.rows(), val.cols());
  }

  // ---- arithmetic -----------------------------------------------------------

  Val add(Val a, Val b) {
    const M &A = value(a), &B = value(b);
    same_shape(A, B, "add");
    return unary_or_binary(A + B, a, b, [this, a, b](const M& g) {
      acc(a, g);
      acc(b, g);
    });
  }

  Val sub(Val a, Val b) {
    const M &A = value(a), &B = value(b);
    same_shape(A, B, "sub");
    return unary_or_binary(A - B, a, b, [this, a, b](const M& g) {
      acc(a, g);
      acc(b, (-g).eval());
    });
  }

  // element-wise product
  Val mul(Val a, Val b) {
    const M &A = value(a), &B = value(b);
    same_shape(A, B, "mul");
    return unary_or_binary(A.cwiseProduct(B), a, b, [this, a, b](const M& g) {
      acc(a, g.cwiseProduct(value(b)));
      acc(b, g.cwiseProduct(value(a)));
    });
  }

  // alpha * a + beta (element-wise)
  Val affine(Val a, S alpha, S beta) {
    const M& A = value(a);
    M out = (A.array() * alpha + beta).matrix();
    return unary_or_binary(std::move(out), a, a, [this, a, alpha](const M& g) {
      acc(a, (g.array() * alpha).matrix().eval());
    });
  }

  // x [n x i] * w [i x o] + b [1 x o] broadcast over rows
  Val linear(Val x, Val w, Val b) {
    const M &X = value(x), &W = value(w), &B = value(b);
    check(X.cols() == W.rows(), Err::dimension_mismatch,
          "linear: x cols " + std::to_string(X.cols()) + " != w rows " + std::to_string(W.rows()));
    check(B.rows() == 1 && B.cols() == W.cols(), Err::dimension_mismatch,
          "linear: bias must be 1 x out");
    M out = X * W;
    out.rowwise() += B.row(0);
    bool rg = needs_grad(x) || needs_grad(w) || needs_grad(b);
    return push(std::move(out), rg, [this, x, w, b](const M& g) {
      acc(x, (g * value(w).transpose()).eval());
      acc(w, (value(x).transpose() * g).eval());
      acc(b, g.colwise().sum().eval());
    });
  }

  Val matmul(Val a, Val b) {
    const M &A = value(a), &B = value(b);
    check(A.cols() == B.rows(), Err::dimension_mismatch, "matmul: inner dims differ");
    return unary_or_binary(A * B, a, b, [this, a, b](const M& g) {
      acc(a, (g * value(b).transpose()).eval());
      acc(b, (value(a).transpose() * g).eval());
    });
  }

  // scale * a * b^T with a [n x d], b [m x d]; the attention-score shape
  Val matmul_nt(Val a, Val b, S scale) {
    const M &A = value(a), &B = value(b);
    check(A.cols() == B.cols(), Err::dimension_mismatch, "matmul_nt: feature dims differ");
    M out = (A * B.transpose()) * scale;
    return unary_or_binary(std::move(out), a, b, [this, a, b, scale](const M& g) {
      acc(a, (g * value(b) * scale).eval());
      acc(b, (g.transpose() * value(a) * scale).eval());
    });
  }

  // ---- nonlinearities --------------------------------------------------------

  Val gelu(Val a) {
    const M& A = value(a);
    M out(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.size(); ++i) {
      S x = A(i);
      out(i) = S(0.5) * x * (S(1) + S(std::erf(double(x) * 0.7071067811865476)));
    }
    return unary_or_binary(std::move(out), a, a, [this, a](const M& g) {
      const M& X = value(a);
      M dx(X.rows(), X.cols());
      for (Eigen::Index i = 0; i < X.size(); ++i) {
        double x = double(X(i));
        double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865476));
        double pdf = std::exp(-0.5 * x * x) * 0.3989422804014327;
        dx(i) = S(cdf + x * pdf);
      }
      acc(a, g.cwiseProduct(dx));
    });
  }

  Val tanh_(Val a) {
    const M& A = value(a);
    M out = A.array().tanh().matrix();
    Val r = push(std::move(out), needs_grad(a), {});
    attach(r, [this, a, r](const M& g) {
      const M& Y = value(r);
      acc(a, g.cwiseProduct((S(1) - Y.array().square()).matrix()));
    });
    return r;
  }

  Val sigmoid(Val a) {
    const M& A = value(a);
    M out = (S(1) / (S(1) + (-A.array()).exp())).matrix();
    Val r = push(std::move(out), needs_grad(a), {});
    attach(r, [this, a, r](const M& g) {
      const M& Y = value(r);
      acc(a, g.cwiseProduct((Y.array() * (S(1) - Y.array())).matrix()));
    });
    return r;
  }

  // element-wise square root (inputs must be non-negative; derivative at 0
  // is left to blow up as in the math)
  Val sqrt_(Val a) {
    const M& A = value(a);
    M out = A.array().sqrt().matrix();
    Val r = push(std::move(out), needs_grad(a), {});
    attach(r, [this, a, r](const M& g) {
      const M& Y = value(r);
      acc(a, (g.array() * (S(0.5) / Y.array())).matrix());
    });
    return r;
  }

  // row-wise softmax with an optional additive mask (use -inf to forbid)
  Val softmax_rows(Val a, const M* mask = nullptr) {
    const M& A = value(a);
    if (mask)
      check(mask->rows() == A.rows() && mask->cols() == A.cols(), Err::dimension_mismatch,
            "softmax mask shape mismatch");
    const S ninf = -std::numeric_limits<S>::infinity();
    M out(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      Eigen::Array<S, 1, Eigen::Dynamic> row = A.row(r).array();
      if (mask) row += mask->row(r).array();
      S mx = row.maxCoeff();
      Eigen::Array<S, 1, Eigen::Dynamic> e = (row - mx).exp();
      // vectorized exp clamps its argument, turning exp(-inf) into a
      // denormal; forbidden positions must hold exactly zero weight
      if (mask)
        for (Eigen::Index c = 0; c < e.size(); ++c)
          if ((*mask)(r, c) == ninf) e(c) = S(0);
      out.row(r) = (e / e.sum()).matrix();
    }
    Val r = push(std::move(out), needs_grad(a), {});
    attach(r, [this, a, r](const M& g) {
      const M& Y = value(r);
      M dx(Y.rows(), Y.cols());
      for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        S dot = g.row(i).cwiseProduct(Y.row(i)).sum();
        dx.row(i) = (g.row(i).array() - dot).matrix().cwiseProduct(Y.row(i));
      }
      acc(a, dx);
    });
    return r;
  }

  // per-row layer norm with learned gain/bias [1 x d]
  Val layer_norm(Val x, Val gain, Val bias, S eps) {
    const M &X = value(x), &G = value(gain), &B = value(bias);
    check(G.rows() == 1 && G.cols() == X.cols() && B.rows() == 1 && B.cols() == X.cols(),
          Err::dimension_mismatch, "layer_norm: gain/bias must be 1 x d");
    const S n = S(X.cols());
    M xhat(X.rows(), X.cols());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      S mu = X.row(r).mean();
      Eigen::Array<S, 1, Eigen::Dynamic> d = X.row(r).array() - mu;
      S var = d.square().sum() / n;
      xhat.row(r) = (d / std::sqrt(var + eps)).matrix();
    }
    M out = xhat;
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      out.row(r) = out.row(r).cwiseProduct(G.row(0)) + B.row(0);
    bool rg = needs_grad(x) || needs_grad(gain) || needs_grad(bias);
    // keep xhat by value: recomputing it in backward would be fine too, but
    // this keeps the closure branch-free
    return push(std::move(out), rg, [this, x, gain, bias, eps, xh = std::move(xhat)](const M& g) {
      const M& X = value(x);
      const M& G = value(gain);
      const S n = S(X.cols());
      M dx(X.rows(), X.cols());
      for (Eigen::Index r = 0; r < X.rows(); ++r) {
        S mu = X.row(r).mean();
        Eigen::Array<S, 1, Eigen::Dynamic> d = X.row(r).array() - mu;
        S var = d.square().sum() / n;
        S inv = S(1) / std::sqrt(var + eps);
        Eigen::Array<S, 1, Eigen::Dynamic> gx = g.row(r).cwiseProduct(G.row(0)).array();
        S mean_gx = gx.sum() / n;
        Eigen::Array<S, 1, Eigen::Dynamic> xr = xh.row(r).array();
        S mean_gx_x = (gx * xr).sum() / n;
        dx.row(r) = (inv * (gx - mean_gx - xr * mean_gx_x)).matrix();
      }
      acc(x, dx);
      M dgain = M::Zero(1, X.cols());
      for (Eigen::Index r = 0; r < X.rows(); ++r)
        dgain.row(0) += g.row(r).cwiseProduct(xh.row(r));
      acc(gain, dgain);
      acc(bias, g.colwise().sum().eval());
    });
  }

  // ---- shape ops -------------------------------------------------------------

  Val concat_cols(Val a, Val b) {
    const M &A = value(a), &B = value(b);
    check(A.rows() == B.rows(), Err::dimension_mismatch, "concat_cols: row counts differ");
    M out(A.rows(), A.cols() + B.cols());
    out << A, B;
    Eigen::Index ca = A.cols();
    return unary_or_binary(std::move(out), a, b, [this, a, b, ca](const M& g) {
      acc(a, g.leftCols(ca).eval());
      acc(b, g.rightCols(g.cols() - ca).eval());
    });
  }

  Val stack_rows(const std::vector<Val>& parts) {
    check(!parts.empty(), Err::empty_input, "stack_rows of nothing");
    Eigen::Index rows = 0, cols = value(parts[0]).cols();
    for (Val p : parts) {
      check(value(p).cols() == cols, Err::dimension_mismatch, "stack_rows: column widths differ");
      rows += value(p).rows();
    }
    M out(rows, cols);
    Eigen::Index at = 0;
    bool rg = false;
    for (Val p : parts) {
      const M& P = value(p);
      out.middleRows(at, P.rows()) = P;
      at += P.rows();
      rg = rg || needs_grad(p);
    }
    return push(std::move(out), rg, [this, parts](const M& g) {
      Eigen::Index at = 0;
      for (Val p : parts) {
        Eigen::Index r = value(p).rows();
        acc(p, g.middleRows(at, r).eval());
        at += r;
      }
    });
  }

  Val slice_rows(Val a, Eigen::Index r0, Eigen::Index nr) {
    const M& A = value(a);
    check(r0 >= 0 && nr >= 1 && r0 + nr <= A.rows(), Err::bad_index, "slice_rows out of range");
    M out = A.middleRows(r0, nr);
    return unary_or_binary(std::move(out), a, a, [this, a, r0, nr](const M& g) {
      Node& n = node_mut(a);
      if (!n.requires_grad) return;
      ensure_grad(n);
      n.grad.middleRows(r0, nr) += g;
    });
  }

  Val slice_cols(Val a, Eigen::Index c0, Eigen::Index nc) {
    const M& A = value(a);
    check(c0 >= 0 && nc >= 1 && c0 + nc <= A.cols(), Err::bad_index, "slice_cols out of range");
    M out = A.middleCols(c0, nc);
    return unary_or_binary(std::move(out), a, a, [this, a, c0, nc](const M& g) {
      Node& n = node_mut(a);
      if (!n.requires_grad) return;
      ensure_grad(n);
      n.grad.middleCols(c0, nc) += g;
    });
  }

  // out.row(k) = a.row(idx[k]); duplicate indices are how we broadcast
  Val gather_rows(Val a, std::vector<int> idx) {
    const M& A = value(a);
    check(!idx.empty(), Err::empty_input, "gather_rows with no indices");
    M out(Eigen::Index(idx.size()), A.cols());
    for (size_t k = 0; k < idx.size(); ++k) {
      check(idx[k] >= 0 && Eigen::Index(idx[k]) < A.rows(), Err::bad_index,
            "gather_rows index out of range");
      out.row(Eigen::Index(k)) = A.row(idx[k]);
    }
    return unary_or_binary(std::move(out), a, a, [this, a, idx = std::move(idx)](const M& g) {
      Node& n = node_mut(a);
      if (!n.requires_grad) return;
      ensure_grad(n);
      for (size_t k = 0; k < idx.size(); ++k) n.grad.row(idx[k]) += g.row(Eigen::Index(k));
    });
  }

  // ---- reductions ------------------------------------------------------------

  // column-wise mean over rows -> 1 x m
  Val mean_rows(Val a) {
    const M& A = value(a);
    M out = A.colwise().mean();
    S inv = S(1) / S(A.rows());
    return unary_or_binary(std::move(out), a, a, [this, a, inv](const M& g) {
      const M& A = value(a);
      M dx = (g * inv).replicate(A.rows(), 1);
      acc(a, dx);
    });
  }

  Val sum_all(Val a) {
    const M& A = value(a);
    M out(1, 1);
    out(0, 0) = A.sum();
    return unary_or_binary(std::move(out), a, a, [this, a](const M& g) {
      const M& A = value(a);
      acc(a, M::Constant(A.rows(), A.cols(), g(0, 0)));
    });
  }

  // global max as 1x1; gradient routes to the first argmax element
  Val max_all(Val a) {
    const M& A = value(a);
    Eigen::Index r = 0, c = 0;
    S m = A.maxCoeff(&r, &c);
    M out(1, 1);
    out(0, 0) = m;
    return unary_or_binary(std::move(out), a, a, [this, a, r, c](const M& g) {
      Node& n = node_mut(a);
      if (!n.requires_grad) return;
      ensure_grad(n);
      n.grad(r, c) += g(0, 0);
    });
  }

  // a / (s + eps) with s a 1x1 node, broadcast over a
  Val div_by_scalar(Val a, Val s, S eps) {
    const M& A = value(a);
    S denom = scalar_value(s) + eps;
    M out = A / denom;
    return unary_or_binary(std::move(out), a, s, [this, a, s, eps](const M& g) {
      S denom = scalar_value(s) + eps;
      acc(a, (g / denom).eval());
      const M& A = value(a);
      M ds(1, 1);
      ds(0, 0) = -(g.cwiseProduct(A)).sum() / (denom * denom);
      acc(s, ds);
    });
  }

  // fused x*wx + h*wh + b for one LSTM step (x [1 x i], h [1 x H], out [1 x 4H])
  Val lstm_gates(Val x, Val h, Val wx, Val wh, Val b) {
    const M &X = value(x), &H = value(h), &WX = value(wx), &WH = value(wh), &B = value(b);
    check(X.cols() == WX.rows() && H.cols() == WH.rows() && WX.cols() == WH.cols() &&
              B.rows() == 1 && B.cols() == WX.cols(),
          Err::dimension_mismatch, "lstm_gates shape mismatch");
    M out = X * WX + H * WH + B;
    bool rg = needs_grad(x) || needs_grad(h) || needs_grad(wx) || needs_grad(wh) || needs_grad(b);
    return push(std::move(out), rg, [this, x, h, wx, wh, b](const M& g) {
      acc(x, (g * value(wx).transpose()).eval());
      acc(h, (g * value(wh).transpose()).eval());
      acc(wx, (value(x).transpose() * g).eval());
      acc(wh, (value(h).transpose() * g).eval());
      acc(b, g);
    });
  }

  // ---- reverse pass -----------------------------------------------------------

  void backward(Val root) {
    check(grad_enabled_, Err::bad_config, "backward on a grad-disabled graph");
    const M& R = value(root);
    check(R.rows() == 1 && R.cols() == 1, Err::dimension_mismatch, "backward root must be 1x1");
    Node& rn = node_mut(root);
    check(rn.requires_grad, Err::bad_config, "backward root does not require grad");
    ensure_grad(rn);
    rn.grad(0, 0) += S(1);
    for (int32_t i = root.i; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      if (n.backward && n.grad.size() > 0) n.backward(n.grad);
    }
  }

 private:
  struct Node {
    M value;
    const M* ref = nullptr;  // set for leaf_ref
    M grad;                  // allocated on first accumulation
    bool requires_grad = false;
    std::function<void(const M&)> backward;
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;

  const Node& node(Val v) const {
    check(v.valid() && size_t(v.i) < nodes_.size(), Err::bad_index, "invalid graph node");
    return nodes_[size_t(v.i)];
  }
  Node& node_mut(Val v) {
    check(v.valid() && size_t(v.i) < nodes_.size(), Err::bad_index, "invalid graph node");
    return nodes_[size_t(v.i)];
  }

  bool needs_grad(Val v) const { return node(v).requires_grad; }

  static void same_shape(const M& a, const M& b, const char* op) {
    check(a.rows() == b.rows() && a.cols() == b.cols(), Err::dimension_mismatch,
          std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()));
  }

  static void ensure_grad(Node& n) {
    if (n.grad.size() == 0) {
      const M& v = n.ref ? *n.ref : n.value;
      n.grad = M::Zero(v.rows(), v.cols());
    }
  }

  void acc(Val v, const M& g) {
    Node& n = node_mut(v);
    if (!n.requires_grad) return;
    ensure_grad(n);
    n.grad += g;
  }

  Val push(M value, bool requires_grad, std::function<void(const M&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad && grad_enabled_) n.backward = std::move(back);
    nodes_.push_back(std::move(n));
    return {int32_t(nodes_.size() - 1)};
  }

  // helper for ops with one or two inputs: output needs grad iff any input does
  template <typename F>
  Val unary_or_binary(M out, Val a, Val b, F&& back) {
    bool rg = needs_grad(a) || needs_grad(b);
    if (!rg || !grad_enabled_) return push(std::move(out), false, {});
    return push(std::move(out), true, std::forward<F>(back));
  }

  // attach a backward closure to a node created via push(..., rg, {})
  template <typename F>
  void attach(Val v, F&& back) {
    Node& n = node_mut(v);
    if (n.requires_grad && grad_enabled_) n.backward = std::forward<F>(back);
  }
};

}  // namespace zsmstm
