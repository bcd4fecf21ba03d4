#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "vfrl/gp.hpp"
#include "vfrl/policy.hpp"
#include "vfrl/rng.hpp"
#include "vfrl/rollout.hpp"

using namespace vfrl;

namespace {

// dq=1, du=1, m_q=2, m_u=1, differences: model input
// [x, dx1, dx2, u_t, u_{t-1}], policy input [x, dx1, dx2].
HistoryConfig hist1d() {
  HistoryConfig h;
  h.m_q = 2;
  h.m_u = 1;
  h.differences = true;
  h.angular = {0};
  return h;
}

GPModel tiny_model() {
  const int n = 40, D = 5;
  Mat X(n, D);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < D; ++d)
      X(i, d) = rng::uniform(1, rng::Stream::explore, 100, i, d, 0, -1, 1);
    y(i) = 0.05 * std::sin(2.0 * X(i, 0)) + 0.03 * X(i, 3) +
           0.01 * X(i, 1) +
           1e-3 * rng::normal(1, rng::Stream::explore, 101, i, 0, 0);
  }
  TrainingData data{X, y};
  GPFitConfig fc;
  fc.iters = 150;
  GPModel m;
  m.fit(data, fc);
  return m;
}

Policy tiny_policy(uint64_t seed) {
  PolicyInit init;
  init.n_basis = 4;
  init.u_max = Vec::Constant(1, 5.0);
  init.center_lo = Vec::Constant(3, -1.0);
  init.center_hi = Vec::Constant(3, 1.0);
  return init_policy(init, 3, 1, seed);
}

RolloutConfig tiny_cfg() {
  RolloutConfig rc;
  rc.particles = 3;
  rc.horizon = 5;
  rc.chunks = 1;
  rc.cost = CostKind::posexp;
  rc.history = hist1d();
  rc.q0_mean = Vec::Constant(1, 0.3);
  rc.q0_std = Vec::Constant(1, 0.05);
  rc.fict = FictKind::gaussian;
  rc.fict_param = Vec::Constant(1, 0.01);
  return rc;
}

}  // namespace

TEST_CASE("rollout gradient matches central finite differences") {
  GPModel model = tiny_model();
  Policy pol = tiny_policy(5);
  RolloutConfig rc = tiny_cfg();
  const uint64_t seed = 99;
  const uint32_t iter = 7;

  RolloutResult base = rollout_cost_grad(model, pol, rc, seed, iter, 1);
  REQUIRE(base.finite);

  auto J_at = [&](const Policy& p) {
    return rollout_cost(model, p, rc, seed, iter);
  };

  double worst = 0.0;
  auto probe = [&](double* x, double g) {
    const double h = 1e-5 * std::max(1.0, std::abs(*x));
    const double saved = *x;
    *x = saved + h;
    const double fp = J_at(pol);
    *x = saved - h;
    const double fm = J_at(pol);
    *x = saved;
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(fd)));
  };

  for (int i = 0; i < pol.w.rows(); ++i)
    for (int j = 0; j < pol.w.cols(); ++j)
      probe(&pol.w(i, j), base.grad_w(i, j));
  for (int i = 0; i < pol.A.rows(); ++i)
    for (int j = 0; j < pol.A.cols(); ++j)
      probe(&pol.A(i, j), base.grad_A(i, j));
  for (int d = 0; d < pol.log_s2.size(); ++d)
    probe(&pol.log_s2(d), base.grad_log_s2(d));

  CHECK(worst < 1e-3);
}

TEST_CASE("worker count never changes the numbers") {
  GPModel model = tiny_model();
  Policy pol = tiny_policy(6);
  RolloutConfig rc = tiny_cfg();
  rc.particles = 10;
  rc.horizon = 8;
  rc.chunks = 4;

  RolloutResult r1 = rollout_cost_grad(model, pol, rc, 3, 2, 1);
  RolloutResult r2 = rollout_cost_grad(model, pol, rc, 3, 2, 2);
  RolloutResult r8 = rollout_cost_grad(model, pol, rc, 3, 2, 8);
  for (const RolloutResult* r : {&r2, &r8}) {
    CHECK(r->J == r1.J);
    CHECK((r->grad_w - r1.grad_w).norm() == 0.0);
    CHECK((r->grad_A - r1.grad_A).norm() == 0.0);
    CHECK((r->grad_log_s2 - r1.grad_log_s2).norm() == 0.0);
  }
}

TEST_CASE("repeat calls are bit-identical, iterations are not") {
  GPModel model = tiny_model();
  Policy pol = tiny_policy(7);
  RolloutConfig rc = tiny_cfg();
  RolloutResult a = rollout_cost_grad(model, pol, rc, 11, 3, 2);
  RolloutResult b = rollout_cost_grad(model, pol, rc, 11, 3, 2);
  CHECK(a.J == b.J);
  CHECK((a.grad_w - b.grad_w).norm() == 0.0);
  RolloutResult c = rollout_cost_grad(model, pol, rc, 11, 4, 2);
  CHECK(a.J != c.J);
  double fwd = rollout_cost(model, pol, rc, 11, 3);
  CHECK(fwd == a.J);
}

TEST_CASE("chunking regroups sums without changing trajectories") {
  GPModel model = tiny_model();
  Policy pol = tiny_policy(8);
  RolloutConfig rc = tiny_cfg();
  rc.particles = 6;
  rc.chunks = 1;
  double j1 = rollout_cost(model, pol, rc, 21, 0);
  rc.chunks = 3;
  double j3 = rollout_cost(model, pol, rc, 21, 0);
  CHECK(j1 == doctest::Approx(j3).epsilon(1e-12));
}

TEST_CASE("fictitious policy-input noise changes the objective") {
  GPModel model = tiny_model();
  Policy pol = tiny_policy(9);
  RolloutConfig rc = tiny_cfg();
  double with = rollout_cost(model, pol, rc, 5, 0);
  rc.fict = FictKind::none;
  double without = rollout_cost(model, pol, rc, 5, 0);
  CHECK(with != without);
  CHECK(std::isfinite(with));
  CHECK(std::isfinite(without));
}

TEST_CASE("objective scale is sane: mean stage cost in [0,1] per step") {
  GPModel model = tiny_model();
  Policy pol = tiny_policy(10);
  RolloutConfig rc = tiny_cfg();
  rc.particles = 20;
  rc.horizon = 12;
  rc.chunks = 2;
  double j = rollout_cost(model, pol, rc, 1, 0);
  CHECK(j > 0.0);
  CHECK(j < rc.horizon);  // posexp stage cost is bounded by 1
}
