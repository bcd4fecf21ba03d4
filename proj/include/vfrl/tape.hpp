#pragma once

#include <vector>

#include "vfrl/common.hpp"

namespace vfrl {

// Append-only reverse-mode tape over dense double matrices. Nodes are
// created in topological order by construction, so backward() is a single
// reverse sweep; fan-out accumulates adjoints by addition. Leaves created
// with requires_grad=false (constants) never receive adjoints.
class Tape {
 public:
  struct Var {
    int i = -1;
  };

  Var leaf(Mat v, bool requires_grad = false);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scalar_mul(Var a, double s);
  Var add_scalar(Var a, double s);
  Var matmul(Var a, Var b);
  Var sum(Var a);     // 1x1
  Var rowsum(Var a);  // Mx1
  Var exp(Var a);
  Var tanh(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var abs(Var a);  // subgradient 0 at 0
  Var square(Var a);
  Var sqrt(Var a);
  Var clamp_min(Var a, double lo);  // pass-through side at the boundary
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int j0, int n);

  // out(i,j) = sum_d w(d) * (X(i,d) - Y(j,d))^2, evaluated without the
  // norm-expansion identity so nearby rows do not cancel.
  // X: MxD, Y: NxD, w: Dx1. Gradients flow to all three.
  Var wsqdist(Var X, Var Y, Var w);

  // out(i) = X.row(i) * S * X.row(i)^T for constant symmetric S.
  // Forward caches V = X*S; backward is dX += 2*diag(g)*V, one cwise pass.
  Var row_quadform(Var X, const Mat& S);

  const Mat& val(Var v) const { return nodes_[v.i].val; }
  int rows(Var v) const { return static_cast<int>(nodes_[v.i].val.rows()); }
  int cols(Var v) const { return static_cast<int>(nodes_[v.i].val.cols()); }

  // Seeds the root with ones of its own shape (1x1 roots get 1.0) and
  // propagates. May be called once per tape state; grads reset on reuse.
  void backward(Var root);

  // Adjoint of v after backward(); zeros if v never received one.
  Mat grad(Var v) const;

  void reset();
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : uint8_t {
    leaf,
    add,
    sub,
    mul,
    scalar_mul,
    add_scalar,
    matmul,
    sum,
    rowsum,
    exp,
    tanh,
    sin,
    cos,
    abs,
    square,
    sqrt,
    clamp_min,
    concat_cols,
    slice_cols,
    wsqdist,
    row_quadform,
  };

  struct Node {
    Op op;
    std::vector<int> args;
    Mat val;
    Mat aux;  // row_quadform: cached X*S; otherwise empty
    double s = 0.0;
    int j0 = 0, j1 = 0;
    bool needs_grad = false;
  };

  Var push(Op op, std::vector<int> args, Mat val);
  bool any_requires(const std::vector<int>& args) const;
  Mat& gref(int i, const Mat& like);

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
  std::vector<uint8_t> has_grad_;
};

}  // namespace vfrl
