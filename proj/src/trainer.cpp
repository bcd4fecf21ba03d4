#include "vfrl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include "vfrl/adam.hpp"
#include "vfrl/costs.hpp"
#include "vfrl/rng.hpp"

namespace vfrl {

namespace {
constexpr double kPi = 3.14159265358979323846;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}
}  // namespace

std::unique_ptr<Plant> make_plant(const ExperimentConfig& cfg) {
  if (cfg.env == "cartpole") {
    CartPoleParams p = cfg.cartpole;
    p.control_rate_hz = cfg.control_rate_hz;
    return std::make_unique<CartPole>(p);
  }
  require(cfg.env == "msd", "unknown env");
  MassSpringDamperParams p = cfg.msd;
  p.control_rate_hz = cfg.control_rate_hz;
  return std::make_unique<MassSpringDamper>(p);
}

Mat explore_signal(const ExploreConfig& ec, int du, const Vec& u_max,
                   double rate_hz, int steps, uint64_t seed,
                   uint32_t episode) {
  require(u_max.size() == du, "u_max length");
  Mat u(steps, du);
  if (ec.kind == ExploreConfig::Kind::filtered_noise) {
    const double a = 1.0 / (1.0 + 2.0 * kPi * ec.cutoff_hz / rate_hz);
    // Stationary variance of y_t = a y_{t-1} + (1-a) x_t with unit white
    // input is (1-a)^2 / (1-a^2); rescale to the target std.
    const double gain = ec.std * std::sqrt((1.0 + a) / (1.0 - a));
    for (int d = 0; d < du; ++d) {
      double y = 0.0;
      for (int t = 0; t < steps; ++t) {
        const double x = rng::normal(seed, rng::Stream::explore, episode,
                                     static_cast<uint32_t>(t),
                                     static_cast<uint32_t>(d), 0);
        y = a * y + (1.0 - a) * x;
        u(t, d) = std::clamp(gain * y, -u_max(d), u_max(d));
      }
    }
  } else {
    const int n = ec.n_components;
    require(n > 0, "explore n_components");
    const double amp = ec.std * std::sqrt(2.0 / n);
    for (int d = 0; d < du; ++d) {
      Vec freq(n), phase(n);
      for (int i = 0; i < n; ++i) {
        freq(i) = rng::uniform(seed, rng::Stream::explore, episode,
                               static_cast<uint32_t>(i),
                               static_cast<uint32_t>(d), 0, ec.freq_lo,
                               ec.freq_hi);
        phase(i) = rng::uniform(seed, rng::Stream::explore, episode,
                                static_cast<uint32_t>(i),
                                static_cast<uint32_t>(d), 1, 0.0, 2.0 * kPi);
      }
      for (int t = 0; t < steps; ++t) {
        double s = 0.0;
        const double time = t / rate_hz;
        for (int i = 0; i < n; ++i) {
          s += amp * std::cos(2.0 * kPi * freq(i) * time + phase(i));
        }
        u(t, d) = std::clamp(s, -u_max(d), u_max(d));
      }
    }
  }
  return u;
}

TrialLog run_episode(Plant& plant, const ExperimentConfig& cfg,
                     const Policy* policy, const Mat* explore_u, int episode,
                     uint64_t seed) {
  require((policy != nullptr) != (explore_u != nullptr),
          "exactly one control source");
  const int dq = plant.dq();
  const int du = plant.du();
  const int H = cfg.horizon_steps();
  const int mq = cfg.history.m_q;
  if (explore_u) {
    require(explore_u->rows() >= H && explore_u->cols() == du,
            "explore signal shape");
  }

  MeasureModel meas{cfg.measure, cfg.measure_param};

  TrialLog log;
  log.episode = episode;
  log.q = Mat::Zero(H, dq);
  log.u = Mat::Zero(H, du);
  log.cost = Vec::Zero(H);

  plant.reset(cfg.q0_mean);

  // Measured-position history, newest first. The plant rests at q0
  // before the episode; prefill measurements are distinct noisy reads of
  // that rest position at virtual times 0..m_q-1.
  std::deque<Vec> meas_hist;
  const uint32_t ep = static_cast<uint32_t>(episode);
  for (int s = mq; s >= 1; --s) {
    meas_hist.push_front(
        meas.apply(cfg.q0_mean, seed, ep, static_cast<uint32_t>(mq - s)));
  }

  int done = 0;
  try {
    for (int t = 0; t < H; ++t) {
      const Vec q_true = plant.positions();
      const Vec q_meas =
          meas.apply(q_true, seed, ep, static_cast<uint32_t>(mq + t));
      meas_hist.push_front(q_meas);
      if (static_cast<int>(meas_hist.size()) > mq + 1) meas_hist.pop_back();

      Vec u(du);
      if (policy) {
        std::vector<Vec> qh(meas_hist.begin(), meas_hist.end());
        u = policy->eval(build_policy_input(cfg.history, qh));
      } else {
        u = explore_u->row(t).transpose();
      }

      log.q.row(t) = q_meas.transpose();
      log.u.row(t) = u.transpose();
      log.cost(t) = stage_cost(cfg.cost, q_meas);
      done = t + 1;

      plant.step(u);
    }
  } catch (const TrialAbort&) {
    log.faulted = true;
    log.q.conservativeResize(done, dq);
    log.u.conservativeResize(done, du);
    log.cost.conservativeResize(done);
  }
  return log;
}

bool trial_success(const ExperimentConfig& cfg, const TrialLog& log,
                   int window) {
  if (log.faulted || log.steps() < window) return false;
  const int n = log.steps();
  for (int t = n - window; t < n; ++t) {
    if (cfg.env == "cartpole") {
      const double p = log.q(t, 0);
      const double alpha = log.q(t, 1);
      if (std::abs(p) >= 0.1) return false;
      if (std::abs(std::abs(alpha) - kPi) >= 0.17) return false;
    } else {
      if (std::abs(log.q(t, 0)) >= 0.1) return false;
    }
  }
  return true;
}

RolloutConfig make_rollout_config(const ExperimentConfig& cfg) {
  RolloutConfig rc;
  rc.particles = cfg.particles;
  rc.horizon = cfg.horizon_steps();
  rc.chunks = cfg.chunks;
  rc.cost = cfg.cost;
  rc.history = cfg.history;
  rc.q0_mean = cfg.q0_mean;
  rc.q0_std = cfg.q0_std;
  rc.fict = cfg.fict;
  rc.fict_param = cfg.fict_param;
  return rc;
}

OptTrace update_policy(const GPModel& model, Policy& policy,
                       const PolicyOptConfig& opt, const RolloutConfig& rc,
                       uint64_t seed, uint32_t iter_base, int workers) {
  OptTrace trace;
  trace.J.reserve(opt.iters);

  Adam adam;
  adam.lr = opt.lr;
  std::vector<Mat*> params = {&policy.w, &policy.A, nullptr};
  Mat ls_mat = policy.log_s2;  // Adam works on matrices; column view
  params[2] = &ls_mat;
  adam.init(params);

  Mat best_w = policy.w, best_A = policy.A;
  Vec best_ls = policy.log_s2;
  int consecutive_bad = 0;

  for (int it = 0; it < opt.iters; ++it) {
    RolloutResult res = rollout_cost_grad(
        model, policy, rc, seed, iter_base + static_cast<uint32_t>(it),
        workers);
    trace.J.push_back(res.J);
    if (!res.finite) {
      ++trace.nan_rejects;
      if (++consecutive_bad >= 3) {
        throw TrialAbort(
            "policy optimization: non-finite objective or gradient 3 "
            "iterations in a row");
      }
      continue;
    }
    consecutive_bad = 0;
    if (res.J < trace.best_J) {
      trace.best_J = res.J;
      trace.best_iter = it;
      best_w = policy.w;
      best_A = policy.A;
      best_ls = policy.log_s2;
    }
    Mat gls = res.grad_log_s2;
    ls_mat = policy.log_s2;
    std::vector<Mat> grads = {res.grad_w, res.grad_A, gls};
    adam.step(params, grads);
    policy.log_s2 = ls_mat;
  }

  if (trace.best_iter >= 0) {
    policy.w = best_w;
    policy.A = best_A;
    policy.log_s2 = best_ls;
  }
  return trace;
}

SeedResult run_experiment(const ExperimentConfig& cfg, uint64_t seed,
                          int workers,
                          const std::function<void(const std::string&)>& note) {
  auto say = [&](const std::string& s) {
    if (note) note(s);
  };

  SeedResult out;
  out.seed = seed;

  auto plant = make_plant(cfg);
  const int dq = plant->dq();
  const int du = plant->du();
  const int H = cfg.horizon_steps();

  // Exploration episode.
  const Mat u0 = explore_signal(cfg.explore, du, cfg.u_max,
                                cfg.control_rate_hz, H, seed, 0);
  TrialLog lg = run_episode(*plant, cfg, nullptr, &u0, 0, seed);
  TrialRecord rec;
  rec.trial = 0;
  rec.explore = true;
  rec.total_cost = lg.total_cost();
  rec.success = trial_success(cfg, lg);
  rec.faulted = lg.faulted;
  out.logs.push_back(std::move(lg));
  out.records.push_back(rec);
  say("episode 0 (explore): cost " + std::to_string(rec.total_cost) +
      (rec.faulted ? " FAULTED" : ""));

  PolicyInit pinit;
  pinit.n_basis = cfg.n_basis;
  pinit.u_max = cfg.u_max;
  pinit.center_lo = cfg.center_lo;
  pinit.center_hi = cfg.center_hi;
  out.policy =
      init_policy(pinit, policy_input_dim(cfg.history, dq), du, seed);

  const RolloutConfig rc = make_rollout_config(cfg);

  for (int trial = 1; trial <= cfg.trials; ++trial) {
    TrialRecord r;
    r.trial = trial;

    auto t0 = std::chrono::steady_clock::now();
    GPModel model;
    TrainingData data = build_training_pairs(cfg.history, out.logs, dq, du);
    if (data.X.rows() < 10) {
      out.aborted = true;
      out.abort_reason = "too few usable training pairs";
      break;
    }
    model.fit(data, cfg.gpfit);
    r.fit_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    try {
      OptTrace tr =
          update_policy(model, out.policy, cfg.opt, rc, seed,
                        static_cast<uint32_t>(trial) << 24, workers);
      r.opt_iters = static_cast<int>(tr.J.size());
      r.nan_rejects = tr.nan_rejects;
      r.best_J = tr.best_J;
      out.opt_traces.push_back(std::move(tr.J));
    } catch (const TrialAbort& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    r.opt_seconds = seconds_since(t0);

    TrialLog el = run_episode(*plant, cfg, &out.policy, nullptr, trial, seed);
    r.total_cost = el.total_cost();
    r.success = trial_success(cfg, el);
    r.faulted = el.faulted;
    out.logs.push_back(std::move(el));
    out.records.push_back(r);
    if (r.success && out.first_success < 0) out.first_success = trial;
    say("trial " + std::to_string(trial) + ": J " + std::to_string(r.best_J) +
        ", executed cost " + std::to_string(r.total_cost) +
        (r.success ? ", success" : "") + (r.faulted ? ", FAULTED" : "") +
        ", fit " + std::to_string(r.fit_seconds) + "s, opt " +
        std::to_string(r.opt_seconds) + "s");
    if (cfg.stop_on_success && r.success) break;
  }
  return out;
}

}  // namespace vfrl
