#include "vfrl/rollout.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <thread>
#include <vector>

#include "vfrl/rng.hpp"

namespace vfrl {

namespace {

struct ChunkOut {
  double J = 0.0;
  Mat gw, gA;
  Vec gs2;
};

// One chunk of particles simulated on its own tape. Global particle
// indices key every random draw, so the split into chunks never changes
// the numbers.
ChunkOut run_chunk(const GPModel& model, const Policy& policy,
                   const RolloutConfig& cfg, uint64_t seed,
                   uint32_t iteration, int m_offset, int m_count,
                   bool with_grad) {
  const int dq = static_cast<int>(cfg.q0_mean.size());
  const int du = policy.du();
  const int H = cfg.horizon;
  const int mq = cfg.history.m_q;
  const int mu = cfg.history.m_u;

  Tape t;
  PolicyVars pv = policy_leaves(t, policy, with_grad);

  // Per-output-dim predictor constants.
  const int dy = model.output_dims();
  require(dy == dq, "rollout: model output dims must match position dims");
  std::vector<Tape::Var> xtr(dy), wef(dy), afold(dy);
  for (int k = 0; k < dy; ++k) {
    const GPModel::Predictor& pr = model.predictor(k);
    xtr[k] = t.leaf(pr.Xtr);
    wef[k] = t.leaf(pr.w_eff);
    afold[k] = t.leaf(pr.alpha_fold);
  }

  auto normal_mat = [&](rng::Stream s, uint32_t i1, int cols) {
    Mat e(m_count, cols);
    for (int m = 0; m < m_count; ++m)
      for (int d = 0; d < cols; ++d)
        e(m, d) = rng::normal(seed, s, iteration, i1,
                              static_cast<uint32_t>(m_offset + m),
                              static_cast<uint32_t>(d));
    return e;
  };

  // Initial particles: gaussian around q0_mean, at rest (the whole
  // position history starts equal to q_0 per particle).
  Mat q0(m_count, dq);
  {
    Mat e = normal_mat(rng::Stream::particle_init, 0, dq);
    for (int m = 0; m < m_count; ++m)
      for (int d = 0; d < dq; ++d)
        q0(m, d) = cfg.q0_mean(d) + cfg.q0_std(d) * e(m, d);
  }
  Tape::Var q0v = t.leaf(q0);

  auto fict_noise = [&](uint32_t vt) -> Mat {
    Mat e(m_count, dq);
    for (int m = 0; m < m_count; ++m)
      for (int d = 0; d < dq; ++d) {
        const auto gm = static_cast<uint32_t>(m_offset + m);
        const auto gd = static_cast<uint32_t>(d);
        if (cfg.fict == FictKind::gaussian)
          e(m, d) = cfg.fict_param(d) * rng::normal(seed,
                                                    rng::Stream::fict_noise,
                                                    iteration, vt, gm, gd);
        else
          e(m, d) = rng::uniform(seed, rng::Stream::fict_noise, iteration, vt,
                                 gm, gd, -cfg.fict_param(d),
                                 cfg.fict_param(d));
      }
    return e;
  };

  auto measure = [&](Tape::Var q, uint32_t vt) -> Tape::Var {
    if (cfg.fict == FictKind::none) return q;
    return t.add(q, t.leaf(fict_noise(vt)));
  };

  // Histories, newest first. True positions feed the model; measured
  // ones feed the policy. Virtual measurement time: prefill slot s
  // (s steps before t=0) sits at vt = mq - s, step t at vt = mq + t.
  std::deque<Tape::Var> true_hist, meas_hist, u_hist;
  true_hist.push_front(q0v);
  meas_hist.push_front(measure(q0v, /*vt=*/mq));
  for (int s = 1; s <= mq; ++s) {
    true_hist.push_back(q0v);
    meas_hist.push_back(measure(q0v, static_cast<uint32_t>(mq - s)));
  }
  Tape::Var zero_u = t.leaf(Mat::Zero(m_count, du));
  for (int s = 1; s <= mu; ++s) u_hist.push_back(zero_u);

  Tape::Var cost_sum = t.leaf(Mat::Zero(1, 1));
  for (int step = 0; step < H; ++step) {
    std::vector<Tape::Var> mh(meas_hist.begin(), meas_hist.end());
    Tape::Var xpol = build_policy_input_tape(t, cfg.history, mh);
    Tape::Var u = policy_eval_tape(t, pv, policy.u_max, xpol);

    Tape::Var qt = true_hist.front();
    cost_sum = t.add(cost_sum, t.sum(stage_cost_tape(t, cfg.cost, qt)));

    if (step + 1 < H) {
      std::vector<Tape::Var> th(true_hist.begin(), true_hist.end());
      std::vector<Tape::Var> uh;
      uh.push_back(u);
      uh.insert(uh.end(), u_hist.begin(), u_hist.end());
      Tape::Var xgp = build_gp_input_tape(t, cfg.history, th, uh);

      Mat eps = normal_mat(rng::Stream::model_eps,
                           static_cast<uint32_t>(step), dq);
      std::vector<Tape::Var> qnext(dq);
      for (int k = 0; k < dq; ++k) {
        const GPModel::Predictor& pr = model.predictor(k);
        Tape::Var e =
            t.exp(t.scalar_mul(t.wsqdist(xgp, xtr[k], wef[k]), -1.0));
        Tape::Var mean = t.add_scalar(t.matmul(e, afold[k]), pr.mu_y);
        Tape::Var var = t.clamp_min(
            t.add_scalar(t.scalar_mul(t.row_quadform(e, pr.B), -pr.c1),
                         pr.c0),
            GPModel::kVarFloor);
        Tape::Var noise =
            t.mul(t.sqrt(var), t.leaf(eps.col(k)));
        Tape::Var delta = t.add(mean, noise);
        qnext[k] = t.add(t.slice_cols(qt, k, 1), delta);
      }
      Tape::Var qn = dq == 1 ? qnext[0] : t.concat_cols(qnext);

      true_hist.push_front(qn);
      true_hist.pop_back();
      meas_hist.push_front(measure(qn, static_cast<uint32_t>(mq + step + 1)));
      meas_hist.pop_back();
      u_hist.push_front(u);
      if (static_cast<int>(u_hist.size()) > mu) u_hist.pop_back();
    }
  }

  Tape::Var root = t.scalar_mul(cost_sum, 1.0 / cfg.particles);
  ChunkOut out;
  out.J = t.val(root)(0, 0);
  if (with_grad) {
    t.backward(root);
    out.gw = t.grad(pv.w);
    out.gA = t.grad(pv.A);
    out.gs2 = t.grad(pv.log_s2);
  }
  return out;
}

std::vector<std::pair<int, int>> chunk_ranges(int particles, int chunks) {
  chunks = std::max(1, std::min(chunks, particles));
  std::vector<std::pair<int, int>> r;
  int base = particles / chunks, rem = particles % chunks, off = 0;
  for (int c = 0; c < chunks; ++c) {
    int sz = base + (c < rem ? 1 : 0);
    r.emplace_back(off, sz);
    off += sz;
  }
  return r;
}

RolloutResult merge(const std::vector<ChunkOut>& outs, const Policy& policy,
                    bool with_grad) {
  RolloutResult res;
  res.grad_w = Mat::Zero(policy.w.rows(), policy.w.cols());
  res.grad_A = Mat::Zero(policy.A.rows(), policy.A.cols());
  res.grad_log_s2 = Vec::Zero(policy.log_s2.size());
  for (const ChunkOut& c : outs) {  // fixed chunk order
    res.J += c.J;
    if (with_grad) {
      res.grad_w += c.gw;
      res.grad_A += c.gA;
      res.grad_log_s2 += c.gs2;
    }
  }
  res.finite = std::isfinite(res.J) && res.grad_w.allFinite() &&
               res.grad_A.allFinite() && res.grad_log_s2.allFinite();
  return res;
}

std::vector<ChunkOut> run_all(const GPModel& model, const Policy& policy,
                              const RolloutConfig& cfg, uint64_t seed,
                              uint32_t iteration, int workers,
                              bool with_grad) {
  require(cfg.particles >= 1, "rollout: particles >= 1");
  require(cfg.horizon >= 1, "rollout: horizon >= 1");
  require(cfg.q0_mean.size() == cfg.q0_std.size(),
          "rollout: q0 mean/std dims differ");
  if (cfg.fict != FictKind::none)
    require(cfg.fict_param.size() == cfg.q0_mean.size(),
            "rollout: fictitious noise param per position dim");
  require(model.fitted(), "rollout: model not fitted");

  auto ranges = chunk_ranges(cfg.particles, cfg.chunks);
  std::vector<ChunkOut> outs(ranges.size());
  const int nw =
      std::max(1, std::min(workers, static_cast<int>(ranges.size())));
  if (nw == 1) {
    for (std::size_t c = 0; c < ranges.size(); ++c)
      outs[c] = run_chunk(model, policy, cfg, seed, iteration,
                          ranges[c].first, ranges[c].second, with_grad);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w)
      pool.emplace_back([&] {
        while (true) {
          std::size_t c = next.fetch_add(1);
          if (c >= ranges.size()) return;
          outs[c] = run_chunk(model, policy, cfg, seed, iteration,
                              ranges[c].first, ranges[c].second, with_grad);
        }
      });
    for (auto& th : pool) th.join();
  }
  return outs;
}

}  // namespace

RolloutResult rollout_cost_grad(const GPModel& model, const Policy& policy,
                                const RolloutConfig& cfg, uint64_t seed,
                                uint32_t iteration, int workers) {
  auto outs = run_all(model, policy, cfg, seed, iteration, workers, true);
  return merge(outs, policy, true);
}

double rollout_cost(const GPModel& model, const Policy& policy,
                    const RolloutConfig& cfg, uint64_t seed,
                    uint32_t iteration) {
  auto outs = run_all(model, policy, cfg, seed, iteration, 1, false);
  return merge(outs, policy, false).J;
}

}  // namespace vfrl
