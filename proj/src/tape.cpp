#include "vfrl/tape.hpp"

#include <cmath>
#include <string>

namespace vfrl {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_same_shape(const char* op, const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
              shape_str(b));
}

}  // namespace

Tape::Var Tape::push(Op op, std::vector<int> args, Mat val) {
  Node n;
  n.op = op;
  n.needs_grad = any_requires(args);
  n.args = std::move(args);
  n.val = std::move(val);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Tape::any_requires(const std::vector<int>& args) const {
  for (int a : args)
    if (nodes_[a].needs_grad) return true;
  return false;
}

Tape::Var Tape::leaf(Mat v, bool requires_grad) {
  Var out = push(Op::leaf, {}, std::move(v));
  nodes_[out.i].needs_grad = requires_grad;
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  check_same_shape("add", nodes_[a.i].val, nodes_[b.i].val);
  return push(Op::add, {a.i, b.i}, nodes_[a.i].val + nodes_[b.i].val);
}

Tape::Var Tape::sub(Var a, Var b) {
  check_same_shape("sub", nodes_[a.i].val, nodes_[b.i].val);
  return push(Op::sub, {a.i, b.i}, nodes_[a.i].val - nodes_[b.i].val);
}

Tape::Var Tape::mul(Var a, Var b) {
  check_same_shape("mul", nodes_[a.i].val, nodes_[b.i].val);
  return push(Op::mul, {a.i, b.i},
              nodes_[a.i].val.cwiseProduct(nodes_[b.i].val));
}

Tape::Var Tape::scalar_mul(Var a, double s) {
  Var out = push(Op::scalar_mul, {a.i}, nodes_[a.i].val * s);
  nodes_[out.i].s = s;
  return out;
}

Tape::Var Tape::add_scalar(Var a, double s) {
  Var out = push(Op::add_scalar, {a.i}, nodes_[a.i].val.array() + s);
  nodes_[out.i].s = s;
  return out;
}

Tape::Var Tape::matmul(Var a, Var b) {
  require(nodes_[a.i].val.cols() == nodes_[b.i].val.rows(),
          "matmul: inner dims " + shape_str(nodes_[a.i].val) + " * " +
              shape_str(nodes_[b.i].val));
  return push(Op::matmul, {a.i, b.i}, nodes_[a.i].val * nodes_[b.i].val);
}

Tape::Var Tape::sum(Var a) {
  Mat v(1, 1);
  v(0, 0) = nodes_[a.i].val.sum();
  return push(Op::sum, {a.i}, std::move(v));
}

Tape::Var Tape::rowsum(Var a) {
  return push(Op::rowsum, {a.i}, nodes_[a.i].val.rowwise().sum());
}

Tape::Var Tape::exp(Var a) {
  return push(Op::exp, {a.i}, nodes_[a.i].val.array().exp());
}

Tape::Var Tape::tanh(Var a) {
  return push(Op::tanh, {a.i}, nodes_[a.i].val.array().tanh());
}

Tape::Var Tape::sin(Var a) {
  return push(Op::sin, {a.i}, nodes_[a.i].val.array().sin());
}

Tape::Var Tape::cos(Var a) {
  return push(Op::cos, {a.i}, nodes_[a.i].val.array().cos());
}

Tape::Var Tape::abs(Var a) {
  return push(Op::abs, {a.i}, nodes_[a.i].val.array().abs());
}

Tape::Var Tape::square(Var a) {
  return push(Op::square, {a.i}, nodes_[a.i].val.array().square());
}

Tape::Var Tape::sqrt(Var a) {
  return push(Op::sqrt, {a.i}, nodes_[a.i].val.array().sqrt());
}

Tape::Var Tape::clamp_min(Var a, double lo) {
  Var out = push(Op::clamp_min, {a.i}, nodes_[a.i].val.cwiseMax(lo));
  nodes_[out.i].s = lo;
  return out;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  Eigen::Index r = nodes_[parts[0].i].val.rows();
  Eigen::Index c = 0;
  std::vector<int> args;
  args.reserve(parts.size());
  for (Var p : parts) {
    require(nodes_[p.i].val.rows() == r, "concat_cols: row mismatch");
    c += nodes_[p.i].val.cols();
    args.push_back(p.i);
  }
  Mat v(r, c);
  Eigen::Index j = 0;
  for (Var p : parts) {
    const Mat& m = nodes_[p.i].val;
    v.middleCols(j, m.cols()) = m;
    j += m.cols();
  }
  return push(Op::concat_cols, std::move(args), std::move(v));
}

Tape::Var Tape::slice_cols(Var a, int j0, int n) {
  require(j0 >= 0 && n >= 0 && j0 + n <= nodes_[a.i].val.cols(),
          "slice_cols: out of range");
  Var out = push(Op::slice_cols, {a.i}, nodes_[a.i].val.middleCols(j0, n));
  nodes_[out.i].j0 = j0;
  nodes_[out.i].j1 = n;
  return out;
}

Tape::Var Tape::wsqdist(Var X, Var Y, Var w) {
  const Mat& x = nodes_[X.i].val;
  const Mat& y = nodes_[Y.i].val;
  const Mat& wm = nodes_[w.i].val;
  require(x.cols() == y.cols(), "wsqdist: feature dims differ");
  require(wm.cols() == 1 && wm.rows() == x.cols(),
          "wsqdist: w must be Dx1 with D = feature dim");
  const Eigen::Index M = x.rows(), N = y.rows(), D = x.cols();
  Mat out = Mat::Zero(M, N);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double wd = wm(d, 0);
    for (Eigen::Index j = 0; j < N; ++j)
      out.col(j).array() += wd * (x.col(d).array() - y(j, d)).square();
  }
  return push(Op::wsqdist, {X.i, Y.i, w.i}, std::move(out));
}

Tape::Var Tape::row_quadform(Var X, const Mat& S) {
  const Mat& x = nodes_[X.i].val;
  require(S.rows() == S.cols() && S.rows() == x.cols(),
          "row_quadform: S must be DxD with D = cols(X)");
  Mat V = x * S;
  Mat out = x.cwiseProduct(V).rowwise().sum();
  Var r = push(Op::row_quadform, {X.i}, std::move(out));
  nodes_[r.i].aux = std::move(V);
  return r;
}

Mat& Tape::gref(int i, const Mat& like) {
  if (!has_grad_[i]) {
    grads_[i].setZero(like.rows(), like.cols());
    has_grad_[i] = 1;
  }
  return grads_[i];
}

void Tape::backward(Var root) {
  require(root.i >= 0 && root.i < static_cast<int>(nodes_.size()),
          "backward: bad root");
  grads_.assign(nodes_.size(), Mat());
  has_grad_.assign(nodes_.size(), 0);
  const Mat& rv = nodes_[root.i].val;
  grads_[root.i] = Mat::Ones(rv.rows(), rv.cols());
  has_grad_[root.i] = 1;

  for (int i = root.i; i >= 0; --i) {
    if (!has_grad_[i] || !nodes_[i].needs_grad) continue;
    const Node& n = nodes_[i];
    const Mat& g = grads_[i];
    auto needs = [&](int k) { return nodes_[n.args[k]].needs_grad; };
    auto aval = [&](int k) -> const Mat& { return nodes_[n.args[k]].val; };
    auto agrad = [&](int k) -> Mat& { return gref(n.args[k], aval(k)); };

    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add:
        if (needs(0)) agrad(0) += g;
        if (needs(1)) agrad(1) += g;
        break;
      case Op::sub:
        if (needs(0)) agrad(0) += g;
        if (needs(1)) agrad(1) -= g;
        break;
      case Op::mul:
        if (needs(0)) agrad(0) += g.cwiseProduct(aval(1));
        if (needs(1)) agrad(1) += g.cwiseProduct(aval(0));
        break;
      case Op::scalar_mul:
        if (needs(0)) agrad(0) += n.s * g;
        break;
      case Op::add_scalar:
        if (needs(0)) agrad(0) += g;
        break;
      case Op::matmul:
        if (needs(0)) agrad(0).noalias() += g * aval(1).transpose();
        if (needs(1)) agrad(1).noalias() += aval(0).transpose() * g;
        break;
      case Op::sum:
        if (needs(0)) agrad(0).array() += g(0, 0);
        break;
      case Op::rowsum:
        if (needs(0)) agrad(0).colwise() += g.col(0);
        break;
      case Op::exp:
        if (needs(0)) agrad(0) += g.cwiseProduct(n.val);
        break;
      case Op::tanh:
        if (needs(0))
          agrad(0).array() += g.array() * (1.0 - n.val.array().square());
        break;
      case Op::sin:
        if (needs(0)) agrad(0).array() += g.array() * aval(0).array().cos();
        break;
      case Op::cos:
        if (needs(0)) agrad(0).array() -= g.array() * aval(0).array().sin();
        break;
      case Op::abs:
        if (needs(0))
          agrad(0).array() += g.array() * aval(0).array().sign();
        break;
      case Op::square:
        if (needs(0)) agrad(0).array() += 2.0 * g.array() * aval(0).array();
        break;
      case Op::sqrt:
        if (needs(0)) agrad(0).array() += 0.5 * g.array() / n.val.array();
        break;
      case Op::clamp_min:
        if (needs(0))
          agrad(0).array() +=
              g.array() * (aval(0).array() >= n.s).cast<double>();
        break;
      case Op::concat_cols: {
        Eigen::Index j = 0;
        for (std::size_t k = 0; k < n.args.size(); ++k) {
          Eigen::Index c = aval(static_cast<int>(k)).cols();
          if (needs(static_cast<int>(k)))
            agrad(static_cast<int>(k)) += g.middleCols(j, c);
          j += c;
        }
        break;
      }
      case Op::slice_cols:
        if (needs(0)) agrad(0).middleCols(n.j0, n.j1) += g;
        break;
      case Op::wsqdist: {
        const Mat& x = aval(0);
        const Mat& y = aval(1);
        const Mat& wm = aval(2);
        const Eigen::Index D = x.cols();
        Mat grow = g.rowwise().sum();        // Mx1
        Mat gcol = g.colwise().sum().transpose();  // Nx1
        Mat gy, gtx;
        if (needs(0) || needs(2)) gy.noalias() = g * y;  // MxD
        if (needs(1)) gtx.noalias() = g.transpose() * x;  // NxD
        for (Eigen::Index d = 0; d < D; ++d) {
          const double wd = wm(d, 0);
          if (needs(0))
            agrad(0).col(d).array() +=
                2.0 * wd *
                (grow.col(0).array() * x.col(d).array() - gy.col(d).array());
          if (needs(1))
            agrad(1).col(d).array() +=
                2.0 * wd *
                (gcol.col(0).array() * y.col(d).array() - gtx.col(d).array());
          if (needs(2))
            gref(n.args[2], wm)(d, 0) +=
                grow.col(0).dot(x.col(d).cwiseProduct(x.col(d))) +
                gcol.col(0).dot(y.col(d).cwiseProduct(y.col(d))) -
                2.0 * x.col(d).dot(gy.col(d));
        }
        break;
      }
      case Op::row_quadform:
        if (needs(0))
          agrad(0).array() +=
              (n.aux.array().colwise() * g.col(0).array()) * 2.0;
        break;
    }
  }
}

Mat Tape::grad(Var v) const {
  require(v.i >= 0 && v.i < static_cast<int>(nodes_.size()), "grad: bad var");
  if (v.i < static_cast<int>(has_grad_.size()) && has_grad_[v.i])
    return grads_[v.i];
  const Mat& x = nodes_[v.i].val;
  return Mat::Zero(x.rows(), x.cols());
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
  has_grad_.clear();
}

}  // namespace vfrl
