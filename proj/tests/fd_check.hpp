#pragma once

// Finite-difference oracle for tape gradients, shared by the unit tests and
// the acceptance suite. A case is a function that, given a tape and leaf
// variables bound to the provided input matrices, returns a scalar root.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "vfrl/tape.hpp"

namespace vfrl::testing {

using CaseFn =
    std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)>;

// Max over all input entries of the relative error between the tape
// gradient and a central finite difference of the scalar root.
inline double fd_max_rel_err(const CaseFn& fn, std::vector<Mat> inputs,
                             double h0 = 1e-5) {
  auto eval = [&](const std::vector<Mat>& ins) {
    Tape t;
    std::vector<Tape::Var> vars;
    vars.reserve(ins.size());
    for (const Mat& m : ins) vars.push_back(t.leaf(m, true));
    Tape::Var root = fn(t, vars);
    if (t.val(root).size() != 1)
      throw std::logic_error("fd case root must be scalar");
    return t.val(root)(0, 0);
  };

  Tape t;
  std::vector<Tape::Var> vars;
  for (const Mat& m : inputs) vars.push_back(t.leaf(m, true));
  Tape::Var root = fn(t, vars);
  t.backward(root);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Mat g = t.grad(vars[k]);
    for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < inputs[k].cols(); ++j) {
        double h = h0 * std::max(1.0, std::abs(inputs[k](i, j)));
        double saved = inputs[k](i, j);
        inputs[k](i, j) = saved + h;
        double fp = eval(inputs);
        inputs[k](i, j) = saved - h;
        double fm = eval(inputs);
        inputs[k](i, j) = saved;
        double fd = (fp - fm) / (2.0 * h);
        double err = std::abs(g(i, j) - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

// Random matrix with entries in [lo, hi], kept away from zero when
// avoid_zero is set (for abs/clamp kinks).
inline Mat rand_mat(std::mt19937& rng, int r, int c, double lo, double hi,
                    bool avoid_zero = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      double v = u(rng);
      if (avoid_zero && std::abs(v) < 0.3) v = v < 0 ? v - 0.3 : v + 0.3;
      m(i, j) = v;
    }
  return m;
}

// One randomly-shaped case per primitive, cycled by index. Returns the
// max relative error against the finite-difference oracle.
double primitive_case_err(int case_idx, std::mt19937& rng);

// Runs n cases; returns the max error across all of them.
inline double primitive_suite_max_err(int n, unsigned seed = 12345) {
  std::mt19937 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, primitive_case_err(i, rng));
  return worst;
}

}  // namespace vfrl::testing
