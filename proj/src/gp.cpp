#include "vfrl/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vfrl/adam.hpp"

namespace vfrl {

namespace {

bool is_angular(const HistoryConfig& h, int d) {
  return !h.angular.empty() && h.angular.at(d) != 0;
}

void check_history(const HistoryConfig& h, int dq) {
  require(h.m_q >= 1, "history: m_q >= 1");
  require(h.m_u >= 0, "history: m_u >= 0");
  require(h.angular.empty() || static_cast<int>(h.angular.size()) == dq,
          "history: angular mask size must match position dims");
}

}  // namespace

int expanded_dim(const HistoryConfig& h, int dq) {
  int e = 0;
  for (int d = 0; d < dq; ++d) e += is_angular(h, d) ? 2 : 1;
  return e;
}

int gp_input_dim(const HistoryConfig& h, int dq, int du) {
  const int e = expanded_dim(h, dq);
  if (h.differences) return e + h.m_q * dq + (h.m_u + 1) * du;
  return (h.m_q + 1) * e + (h.m_u + 1) * du;
}

int policy_input_dim(const HistoryConfig& h, int dq) {
  const int e = expanded_dim(h, dq);
  if (h.differences) return e + h.m_q * dq;
  return (h.m_q + 1) * e;
}

namespace {

void append_expanded(const HistoryConfig& h, const Vec& q,
                     std::vector<double>& out) {
  for (Eigen::Index d = 0; d < q.size(); ++d) {
    if (is_angular(h, static_cast<int>(d))) {
      out.push_back(std::sin(q(d)));
      out.push_back(std::cos(q(d)));
    } else {
      out.push_back(q(d));
    }
  }
}

Vec build_position_block(const HistoryConfig& h,
                         const std::vector<Vec>& qhist) {
  const int dq = static_cast<int>(qhist.at(0).size());
  check_history(h, dq);
  require(static_cast<int>(qhist.size()) == h.m_q + 1,
          "history: need m_q+1 position entries, newest first");
  std::vector<double> out;
  if (h.differences) {
    append_expanded(h, qhist[0], out);
    for (int i = 1; i <= h.m_q; ++i) {
      Vec diff = qhist[i - 1] - qhist[i];
      for (Eigen::Index d = 0; d < diff.size(); ++d) out.push_back(diff(d));
    }
  } else {
    for (int i = 0; i <= h.m_q; ++i) append_expanded(h, qhist[i], out);
  }
  return Eigen::Map<Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace

Vec build_gp_input(const HistoryConfig& h, const std::vector<Vec>& qhist,
                   const std::vector<Vec>& uhist) {
  require(static_cast<int>(uhist.size()) == h.m_u + 1,
          "history: need m_u+1 control entries, newest first");
  Vec pos = build_position_block(h, qhist);
  const int du = static_cast<int>(uhist.at(0).size());
  Vec out(pos.size() + (h.m_u + 1) * du);
  out.head(pos.size()) = pos;
  Eigen::Index j = pos.size();
  for (int i = 0; i <= h.m_u; ++i) {
    out.segment(j, du) = uhist[i];
    j += du;
  }
  return out;
}

Vec build_policy_input(const HistoryConfig& h, const std::vector<Vec>& qhist) {
  return build_position_block(h, qhist);
}

namespace {

std::vector<Tape::Var> expanded_tape(Tape& t, const HistoryConfig& h,
                                     Tape::Var q) {
  std::vector<Tape::Var> parts;
  for (int d = 0; d < t.cols(q); ++d) {
    Tape::Var col = t.slice_cols(q, d, 1);
    if (is_angular(h, d)) {
      parts.push_back(t.sin(col));
      parts.push_back(t.cos(col));
    } else {
      parts.push_back(col);
    }
  }
  return parts;
}

std::vector<Tape::Var> position_block_tape(Tape& t, const HistoryConfig& h,
                                           const std::vector<Tape::Var>& qh) {
  check_history(h, t.cols(qh.at(0)));
  require(static_cast<int>(qh.size()) == h.m_q + 1,
          "history: need m_q+1 position entries, newest first");
  std::vector<Tape::Var> parts = expanded_tape(t, h, qh[0]);
  if (h.differences) {
    for (int i = 1; i <= h.m_q; ++i) parts.push_back(t.sub(qh[i - 1], qh[i]));
  } else {
    for (int i = 1; i <= h.m_q; ++i) {
      auto more = expanded_tape(t, h, qh[i]);
      parts.insert(parts.end(), more.begin(), more.end());
    }
  }
  return parts;
}

}  // namespace

Tape::Var build_gp_input_tape(Tape& t, const HistoryConfig& h,
                              const std::vector<Tape::Var>& qhist,
                              const std::vector<Tape::Var>& uhist) {
  require(static_cast<int>(uhist.size()) == h.m_u + 1,
          "history: need m_u+1 control entries, newest first");
  std::vector<Tape::Var> parts = position_block_tape(t, h, qhist);
  for (Tape::Var u : uhist) parts.push_back(u);
  return t.concat_cols(parts);
}

Tape::Var build_policy_input_tape(Tape& t, const HistoryConfig& h,
                                  const std::vector<Tape::Var>& qhist) {
  return t.concat_cols(position_block_tape(t, h, qhist));
}

TrainingData build_training_pairs(const HistoryConfig& h,
                                  const std::vector<TrialLog>& logs, int dq,
                                  int du) {
  check_history(h, dq);
  const int h0 = std::max(h.m_q, h.m_u);
  const int D = gp_input_dim(h, dq, du);
  int n = 0;
  for (const TrialLog& log : logs)
    if (!log.faulted) n += std::max(0, log.steps() - 1 - h0);
  TrainingData data;
  data.X.resize(n, D);
  data.Y.resize(n, dq);
  int r = 0;
  for (const TrialLog& log : logs) {
    if (log.faulted) continue;
    for (int t = h0; t + 1 < log.steps(); ++t) {
      std::vector<Vec> qhist, uhist;
      for (int i = 0; i <= h.m_q; ++i)
        qhist.push_back(log.q.row(t - i).transpose());
      for (int i = 0; i <= h.m_u; ++i)
        uhist.push_back(log.u.row(t - i).transpose());
      data.X.row(r) = build_gp_input(h, qhist, uhist).transpose();
      data.Y.row(r) = log.q.row(t + 1) - log.q.row(t);
      ++r;
    }
  }
  return data;
}

// ------------------------------------------------------------------ fit ---

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

struct LmlResult {
  double lml = -std::numeric_limits<double>::infinity();
  Vec grad;       // d lml / d theta, theta = [log lam_1..D, log amp, log noise]
  double jitter = 0.0;
  bool ok = false;
};

// One evaluation of the log marginal likelihood and its gradient at
// theta, with jitter escalation on Cholesky failure.
LmlResult eval_lml(const std::vector<Mat>& D2, const Vec& ys, const Vec& theta,
                   bool want_grad) {
  const int n = static_cast<int>(ys.size());
  const int D = static_cast<int>(D2.size());
  LmlResult res;
  res.grad = Vec::Zero(D + 2);

  const double amp = std::exp(theta(D));
  const double noise = std::exp(theta(D + 1));
  if (!std::isfinite(amp) || !std::isfinite(noise)) return res;

  Mat S = Mat::Zero(n, n);
  for (int d = 0; d < D; ++d) S += D2[d] * std::exp(-theta(d));
  Mat E = (-S.array()).exp().matrix();
  Mat K = amp * E;

  Eigen::LLT<Mat> llt;
  double jitter = 1e-10 * amp;
  const double jitter_max = 1e-4 * amp;
  while (true) {
    Mat Ky = K;
    Ky.diagonal().array() += noise + jitter;
    llt.compute(Ky);
    if (llt.info() == Eigen::Success) break;
    jitter *= 10.0;
    if (jitter > jitter_max * 1.0000001) return res;
  }
  res.jitter = jitter;

  Vec alpha = llt.solve(ys);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  logdet *= 2.0;
  res.lml = -0.5 * ys.dot(alpha) - 0.5 * logdet - 0.5 * n * kLog2Pi;
  if (!std::isfinite(res.lml)) {
    res.lml = -std::numeric_limits<double>::infinity();
    return res;
  }
  res.ok = true;
  if (!want_grad) return res;

  Mat Kinv = llt.solve(Mat::Identity(n, n));
  Mat P = alpha * alpha.transpose() - Kinv;
  for (int d = 0; d < D; ++d)
    res.grad(d) =
        0.5 * std::exp(-theta(d)) * P.cwiseProduct(K.cwiseProduct(D2[d])).sum();
  res.grad(D) = 0.5 * P.cwiseProduct(K).sum();
  res.grad(D + 1) = 0.5 * noise * P.trace();
  return res;
}

}  // namespace

LmlEval gp_lml(const Mat& Xs, const Vec& ys, const Vec& theta) {
  const int n = static_cast<int>(Xs.rows());
  const int D = static_cast<int>(Xs.cols());
  require(theta.size() == D + 2, "gp_lml: theta = [log lam.., amp, noise]");
  std::vector<Mat> D2(D);
  for (int d = 0; d < D; ++d) {
    Mat m(n, n);
    for (int j = 0; j < n; ++j)
      m.col(j) = (Xs.col(d).array() - Xs(j, d)).square();
    D2[d] = std::move(m);
  }
  LmlResult r = eval_lml(D2, ys, theta, true);
  return LmlEval{r.lml, r.grad, r.jitter, r.ok};
}

void GPModel::fit(const TrainingData& data, const GPFitConfig& cfg) {
  const int n = static_cast<int>(data.X.rows());
  const int D = static_cast<int>(data.X.cols());
  const int dy = static_cast<int>(data.Y.cols());
  require(n >= 2, "gp fit: need at least 2 rows");
  require(data.Y.rows() == n, "gp fit: X/Y row mismatch");

  train_x_ = data.X;
  train_y_ = data.Y;
  mu_x_ = data.X.colwise().mean().transpose();
  sd_x_.resize(D);
  for (int d = 0; d < D; ++d) {
    double var = (data.X.col(d).array() - mu_x_(d)).square().mean();
    sd_x_(d) = std::max(std::sqrt(var), 1e-12);
  }
  Mat Xs = data.X.rowwise() - mu_x_.transpose();
  Xs.array().rowwise() /= sd_x_.transpose().array();

  // Per-dim squared-difference matrices of the standardized inputs,
  // shared across all optimizer iterations and output dims.
  std::vector<Mat> D2(D);
  for (int d = 0; d < D; ++d) {
    Mat m(n, n);
    for (int j = 0; j < n; ++j)
      m.col(j) = (Xs.col(d).array() - Xs(j, d)).square();
    D2[d] = std::move(m);
  }

  mu_y_.resize(dy);
  sd_y_.resize(dy);
  predictors_.assign(dy, Predictor{});
  hypers_.assign(dy, Hyper{});

  for (int k = 0; k < dy; ++k) {
    mu_y_(k) = data.Y.col(k).mean();
    double vary = (data.Y.col(k).array() - mu_y_(k)).square().mean();
    sd_y_(k) = std::max(std::sqrt(vary), 1e-12);
    Vec ys = (data.Y.col(k).array() - mu_y_(k)) / sd_y_(k);
    const double vys = ys.array().square().mean();

    Vec theta(D + 2);
    theta.head(D).setZero();
    theta(D) = std::log(std::max(vys, 1e-12));
    theta(D + 1) = std::log(std::max(cfg.noise_init_frac * vys, 1e-12));

    Vec best_theta = theta;
    LmlResult best = eval_lml(D2, ys, theta, false);
    require(best.ok, "gp fit: initial hyperparameters are degenerate");

    Adam opt;
    opt.lr = cfg.lr;
    Mat tm = theta;
    std::vector<Mat*> params = {&tm};
    opt.init(params);
    int failures = 0;
    for (int it = 0; it < cfg.iters; ++it) {
      Vec th = tm.col(0);
      LmlResult r = eval_lml(D2, ys, th, true);
      if (!r.ok || !r.grad.allFinite()) {
        if (++failures >= 2) break;
        continue;
      }
      failures = 0;
      if (r.lml > best.lml) {
        best = r;
        best_theta = th;
      }
      std::vector<Mat> grads = {-r.grad};  // maximize lml
      opt.step(params, grads);
    }

    // Freeze the best hyperparameters seen and build the predictor.
    const double amp = std::exp(best_theta(D));
    const double noise = std::exp(best_theta(D + 1));
    Hyper& hy = hypers_[k];
    hy.lam = best_theta.head(D).array().exp().matrix();
    hy.amp = amp;
    hy.noise = noise;
    hy.lml = best.lml;

    Mat S = Mat::Zero(n, n);
    for (int d = 0; d < D; ++d) S += D2[d] / hy.lam(d);
    Mat Ky = amp * (-S.array()).exp().matrix();
    Eigen::LLT<Mat> llt;
    double jitter = 1e-10 * amp;
    while (true) {
      Mat Kj = Ky;
      Kj.diagonal().array() += noise + jitter;
      llt.compute(Kj);
      if (llt.info() == Eigen::Success) break;
      jitter *= 10.0;
      require(jitter <= 1e-4 * amp * 1.0000001,
              "gp fit: kernel matrix not factorizable at best lml");
    }
    hy.jitter = jitter;

    Predictor& pr = predictors_[k];
    pr.Xtr = data.X;
    pr.w_eff = (hy.lam.array() * sd_x_.array().square()).inverse().matrix();
    pr.B = llt.solve(Mat::Identity(n, n));
    pr.alpha_fold = amp * sd_y_(k) * llt.solve(ys);
    pr.c0 = sd_y_(k) * sd_y_(k) * amp;
    pr.c1 = pr.c0 * amp;
    pr.mu_y = mu_y_(k);
  }
}

void GPModel::predict(int dim, const Mat& Xstar, Vec& mean, Vec& var) const {
  const Predictor& pr = predictors_.at(dim);
  const int m = static_cast<int>(Xstar.rows());
  const int n = static_cast<int>(pr.Xtr.rows());
  require(Xstar.cols() == pr.Xtr.cols(), "predict: input dim mismatch");

  Mat Sd = Mat::Zero(m, n);
  for (int d = 0; d < Xstar.cols(); ++d) {
    const double wd = pr.w_eff(d);
    for (int j = 0; j < n; ++j)
      Sd.col(j).array() +=
          wd * (Xstar.col(d).array() - pr.Xtr(j, d)).square();
  }
  Mat e = (-Sd.array()).exp().matrix();
  mean = ((e * pr.alpha_fold).array() + pr.mu_y).matrix();
  Mat V = e * pr.B;
  var = (pr.c0 - pr.c1 * e.cwiseProduct(V).rowwise().sum().array())
            .cwiseMax(kVarFloor)
            .matrix();
}

}  // namespace vfrl
