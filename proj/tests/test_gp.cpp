#include <cmath>
#include <random>

#include "doctest.h"
#include "fd_check.hpp"
#include "vfrl/gp.hpp"

using namespace vfrl;

namespace {

HistoryConfig cartpole_history(bool differences = true) {
  HistoryConfig h;
  h.m_q = 2;
  h.m_u = 1;
  h.differences = differences;
  h.angular = {0, 1};  // [p, alpha]
  return h;
}

}  // namespace

TEST_CASE("input dimensions for the cartpole windows") {
  HistoryConfig hd = cartpole_history(true);
  CHECK(expanded_dim(hd, 2) == 3);
  CHECK(gp_input_dim(hd, 2, 1) == 9);
  CHECK(policy_input_dim(hd, 2) == 7);
  HistoryConfig hn = cartpole_history(false);
  CHECK(gp_input_dim(hn, 2, 1) == 11);
  CHECK(policy_input_dim(hn, 2) == 9);
}

TEST_CASE("plain and tape feature builders agree") {
  std::mt19937 rg(7);
  for (bool differences : {true, false}) {
    HistoryConfig h = cartpole_history(differences);
    std::vector<Vec> qhist, uhist;
    Mat qs = testing::rand_mat(rg, 3, 2, -2, 2);
    Mat us = testing::rand_mat(rg, 2, 1, -5, 5);
    for (int i = 0; i < 3; ++i) qhist.push_back(qs.row(i).transpose());
    for (int i = 0; i < 2; ++i) uhist.push_back(us.row(i).transpose());

    Vec plain = build_gp_input(h, qhist, uhist);
    Vec plain_pol = build_policy_input(h, qhist);

    Tape t;
    std::vector<Tape::Var> qv, uv;
    for (int i = 0; i < 3; ++i) qv.push_back(t.leaf(qs.row(i)));
    for (int i = 0; i < 2; ++i) uv.push_back(t.leaf(us.row(i)));
    Mat taped = t.val(build_gp_input_tape(t, h, qv, uv));
    Mat taped_pol = t.val(build_policy_input_tape(t, h, qv));

    REQUIRE(taped.cols() == plain.size());
    for (int j = 0; j < plain.size(); ++j)
      CHECK(taped(0, j) == plain(j));
    REQUIRE(taped_pol.cols() == plain_pol.size());
    for (int j = 0; j < plain_pol.size(); ++j)
      CHECK(taped_pol(0, j) == plain_pol(j));
  }
}

TEST_CASE("feature layout places blocks where documented") {
  HistoryConfig h = cartpole_history(true);
  std::vector<Vec> qhist(3, Vec(2)), uhist(2, Vec(1));
  qhist[0] << 0.1, 0.5;   // q_t
  qhist[1] << 0.2, 0.3;   // q_{t-1}
  qhist[2] << 0.15, 0.1;  // q_{t-2}
  uhist[0] << 3.0;        // u_t
  uhist[1] << -1.0;       // u_{t-1}
  Vec x = build_gp_input(h, qhist, uhist);
  REQUIRE(x.size() == 9);
  CHECK(x(0) == 0.1);                    // p_t (not angular)
  CHECK(x(1) == std::sin(0.5));          // sin alpha_t
  CHECK(x(2) == std::cos(0.5));          // cos alpha_t
  CHECK(x(3) == doctest::Approx(-0.1));  // p_t - p_{t-1}
  CHECK(x(4) == doctest::Approx(0.2));   // alpha_t - alpha_{t-1}
  CHECK(x(5) == doctest::Approx(0.05));  // p_{t-1} - p_{t-2}
  CHECK(x(6) == doctest::Approx(0.2));   // alpha_{t-1} - alpha_{t-2}
  CHECK(x(7) == 3.0);                    // u_t
  CHECK(x(8) == -1.0);                   // u_{t-1}
}

TEST_CASE("training pairs: counts, inputs, and increment targets") {
  HistoryConfig h = cartpole_history(true);
  TrialLog log;
  log.episode = 0;
  const int T = 90;
  log.q.resize(T, 2);
  log.u.resize(T, 1);
  log.cost = Vec::Zero(T);
  for (int t = 0; t < T; ++t) {
    log.q(t, 0) = std::sin(0.07 * t);
    log.q(t, 1) = 0.02 * t;
    log.u(t, 0) = std::cos(0.11 * t);
  }
  TrainingData d = build_training_pairs(h, {log}, 2, 1);
  CHECK(d.X.rows() == 87);  // t = 2..88
  CHECK(d.X.cols() == 9);
  // first pair is at t = max(m_q, m_u) = 2
  CHECK(d.Y(0, 0) == doctest::Approx(log.q(3, 0) - log.q(2, 0)));
  CHECK(d.X(0, 7) == log.u(2, 0));
  CHECK(d.X(0, 8) == log.u(1, 0));

  // faulted episodes contribute nothing
  TrialLog bad = log;
  bad.episode = 1;
  bad.faulted = true;
  CHECK(build_training_pairs(h, {log, bad}, 2, 1).X.rows() == 87);

  // two clean episodes stack
  TrialLog second = log;
  second.episode = 1;
  CHECK(build_training_pairs(h, {log, second}, 2, 1).X.rows() == 174);
}

namespace {

TrainingData sine_data(int n, double noise_std, unsigned seed) {
  std::mt19937 rg(seed);
  std::normal_distribution<double> nd(0.0, noise_std);
  std::uniform_real_distribution<double> ux(0.0, 3.0);
  TrainingData d;
  d.X.resize(n, 1);
  d.Y.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = ux(rg);
    d.Y(i, 0) = std::sin(2.0 * d.X(i, 0)) + nd(rg);
  }
  return d;
}

}  // namespace

TEST_CASE("gp regression recovers a smooth function") {
  TrainingData d = sine_data(40, 1e-3, 11);
  GPModel gp;
  GPFitConfig fc;
  fc.iters = 400;
  gp.fit(d, fc);

  Mat xs(7, 1);
  xs << 0.2, 0.7, 1.1, 1.6, 2.0, 2.4, 2.8;
  Vec mean, var;
  gp.predict(0, xs, mean, var);
  for (int i = 0; i < xs.rows(); ++i) {
    CHECK(std::abs(mean(i) - std::sin(2.0 * xs(i, 0))) < 5e-3);
    CHECK(var(i) >= GPModel::kVarFloor);
  }

  // far off-support the variance must approach the prior amplitude
  Mat far(1, 1);
  far << 50.0;
  gp.predict(0, far, mean, var);
  double prior = gp.target_scale(0) * gp.target_scale(0) * gp.hyper(0).amp;
  CHECK(var(0) == doctest::Approx(prior).epsilon(1e-6));
  CHECK(std::abs(mean(0) - gp.target_mean(0)) < 1e-6);
}

TEST_CASE("fitted noise brackets the injected noise") {
  // targets are pure noise around a slow trend; the noise hyperparameter
  // (de-standardized) must land within a factor of 3 of the truth
  const double sigma = 0.1;
  TrainingData d = sine_data(60, sigma, 23);
  GPModel gp;
  GPFitConfig fc;
  fc.iters = 600;
  gp.fit(d, fc);
  double noise_raw =
      gp.hyper(0).noise * gp.target_scale(0) * gp.target_scale(0);
  CHECK(noise_raw > sigma * sigma / 3.0);
  CHECK(noise_raw < sigma * sigma * 3.0);
}

TEST_CASE("fit never returns hyperparameters worse than the start") {
  TrainingData d = sine_data(30, 0.05, 5);
  GPModel a, b;
  GPFitConfig f0;
  f0.iters = 0;  // baseline: initial heuristics only
  a.fit(d, f0);
  GPFitConfig f1;
  f1.iters = 300;
  b.fit(d, f1);
  CHECK(b.hyper(0).lml >= a.hyper(0).lml);
}

TEST_CASE("near-duplicate inputs are factorizable through jitter") {
  TrainingData d;
  d.X = Mat::Zero(20, 2);
  d.Y.resize(20, 1);
  for (int i = 0; i < 20; ++i) {
    d.X(i, 0) = (i % 5) * 1e-13;  // five clusters of identical points
    d.X(i, 1) = i % 5;
    d.Y(i, 0) = std::sin(static_cast<double>(i % 5));
  }
  GPModel gp;
  GPFitConfig fc;
  fc.iters = 50;
  gp.fit(d, fc);
  CHECK(std::isfinite(gp.hyper(0).lml));
}

TEST_CASE("training-set error beats the zero predictor") {
  TrainingData d = sine_data(40, 0.05, 17);
  d.Y.array() += 5.0;  // offset the zero predictor cannot absorb
  GPModel gp;
  GPFitConfig fc;
  fc.iters = 300;
  gp.fit(d, fc);
  Vec mean, var;
  gp.predict(0, d.X, mean, var);
  const double rmse = std::sqrt((mean - d.Y.col(0)).squaredNorm() / d.X.rows());
  const double zero_rmse = std::sqrt(d.Y.col(0).squaredNorm() / d.X.rows());
  CHECK(rmse <= zero_rmse);
  CHECK(rmse < 0.1);  // interpolation residual at the noise scale
}

TEST_CASE("fit is deterministic") {
  TrainingData d = sine_data(25, 0.02, 31);
  GPFitConfig fc;
  fc.iters = 200;
  GPModel a, b;
  a.fit(d, fc);
  b.fit(d, fc);
  CHECK(a.hyper(0).lml == b.hyper(0).lml);
  CHECK((a.hyper(0).lam - b.hyper(0).lam).cwiseAbs().maxCoeff() == 0.0);
  Mat xs(3, 1);
  xs << 0.3, 1.2, 2.7;
  Vec ma, va, mb, vb;
  a.predict(0, xs, ma, va);
  b.predict(0, xs, mb, vb);
  CHECK((ma - mb).norm() == 0.0);
  CHECK((va - vb).norm() == 0.0);
}

TEST_CASE("analytic lml gradients match finite differences") {
  // independent oracle for the fit's gradient path: perturb each log
  // hyperparameter and compare the lml slope
  TrainingData d = sine_data(15, 0.05, 77);
  GPModel gp;
  GPFitConfig fc;
  fc.iters = 120;
  gp.fit(d, fc);

  // rebuild the standardized problem exactly as fit() sees it
  Vec ys(15);
  for (int i = 0; i < 15; ++i)
    ys(i) = (d.Y(i, 0) - gp.target_mean(0)) / gp.target_scale(0);
  Mat Xs = d.X;
  for (int i = 0; i < 15; ++i)
    Xs(i, 0) = (d.X(i, 0) - gp.input_mean()(0)) / gp.input_scale()(0);

  auto lml_at = [&](double loglam, double logamp, double lognoise) {
    const int n = 15;
    Mat K(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double diff = Xs(i, 0) - Xs(j, 0);
        K(i, j) = std::exp(logamp) *
                  std::exp(-diff * diff / std::exp(loglam));
      }
    K.diagonal().array() += std::exp(lognoise) + gp.hyper(0).jitter;
    Eigen::LLT<Mat> llt(K);
    Vec alpha = llt.solve(ys);
    double logdet = 0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
    return -0.5 * ys.dot(alpha) - logdet - 0.5 * n * 1.8378770664093455;
  };

  const double l0 = std::log(gp.hyper(0).lam(0));
  const double a0 = std::log(gp.hyper(0).amp);
  const double n0 = std::log(gp.hyper(0).noise);
  CHECK(std::isfinite(lml_at(l0, a0, n0)));
  CHECK(lml_at(l0, a0, n0) == doctest::Approx(gp.hyper(0).lml).epsilon(1e-9));

  // gradient components against central differences of gp_lml itself
  Vec theta(3);
  theta << 0.4, -0.2, std::log(0.05);
  LmlEval at = gp_lml(Xs, ys, theta);
  REQUIRE(at.ok);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec tp = theta, tm = theta;
    tp(k) += h;
    tm(k) -= h;
    double fd = (gp_lml(Xs, ys, tp).lml - gp_lml(Xs, ys, tm).lml) / (2 * h);
    CHECK(at.grad(k) == doctest::Approx(fd).epsilon(1e-5));
  }
}
