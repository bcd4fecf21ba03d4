#pragma once

#include <cmath>
#include <vector>

#include "vfrl/common.hpp"

namespace vfrl {

// Adam over a list of dense parameter blocks. Callers are responsible
// for rejecting non-finite gradients before stepping; a rejected
// iteration must leave params, moments, and the step count untouched.
struct Adam {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;

  int t = 0;
  std::vector<Mat> m, v;

  void init(const std::vector<Mat*>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const Mat* p : params) {
      m.push_back(Mat::Zero(p->rows(), p->cols()));
      v.push_back(Mat::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<Mat*>& params, const std::vector<Mat>& grads) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k].cwiseProduct(grads[k]);
      params[k]->array() -=
          lr * (m[k].array() / c1) /
          ((v[k].array() / c2).sqrt() + eps);
    }
  }
};

}  // namespace vfrl
