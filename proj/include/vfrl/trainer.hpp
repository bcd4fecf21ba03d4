#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vfrl/config.hpp"
#include "vfrl/dataset.hpp"
#include "vfrl/gp.hpp"
#include "vfrl/policy.hpp"
#include "vfrl/rollout.hpp"

namespace vfrl {

std::unique_ptr<Plant> make_plant(const ExperimentConfig& cfg);

// Open-loop excitation for the first episode, one column per control
// dim, clamped to +-u_max. filtered_noise: white noise through a
// backward-Euler one-pole low-pass (a = 1/(1 + 2*pi*fc/fs)), rescaled to
// the target stationary std. cosines: n equal-amplitude cosines with
// uniform random frequencies and phases, scaled so the expected signal
// std matches.
Mat explore_signal(const ExploreConfig& ec, int du, const Vec& u_max,
                   double rate_hz, int steps, uint64_t seed, uint32_t episode);

// Runs one episode on the plant. Exactly one of `policy` / `explore_u`
// must be non-null. The log holds measured positions, applied controls,
// and stage costs of the measured positions; a plant divergence marks
// the log faulted and truncates it at the last completed step.
TrialLog run_episode(Plant& plant, const ExperimentConfig& cfg,
                     const Policy* policy, const Mat* explore_u, int episode,
                     uint64_t seed);

// Balance criterion on the executed (measured) trajectory: every one of
// the last `window` samples inside the target tube. Cart-pole: |p| < 0.1
// and ||alpha| - pi| < 0.17. Mass-spring-damper: |x| < 0.1.
bool trial_success(const ExperimentConfig& cfg, const TrialLog& log,
                   int window = 30);

struct OptTrace {
  std::vector<double> J;  // objective per attempted iteration
  int nan_rejects = 0;
  int best_iter = -1;
  double best_J = std::numeric_limits<double>::infinity();
};

// Adam ascent on the particle objective, monotone in the returned
// policy: the parameters that achieved the best J are restored at the
// end. Non-finite gradients reject the step; three consecutive rejects
// abort the trial.
OptTrace update_policy(const GPModel& model, Policy& policy,
                       const PolicyOptConfig& opt, const RolloutConfig& rc,
                       uint64_t seed, uint32_t iter_base, int workers);

RolloutConfig make_rollout_config(const ExperimentConfig& cfg);

struct TrialRecord {
  int trial = 0;  // 0 = exploration episode
  bool explore = false;
  double total_cost = 0.0;
  bool success = false;
  bool faulted = false;
  int opt_iters = 0;
  int nan_rejects = 0;
  double best_J = std::numeric_limits<double>::quiet_NaN();
  double fit_seconds = 0.0;
  double opt_seconds = 0.0;
};

struct SeedResult {
  uint64_t seed = 0;
  std::vector<TrialLog> logs;
  std::vector<TrialRecord> records;
  std::vector<std::vector<double>> opt_traces;  // J per iteration, per trial
  Policy policy;
  bool aborted = false;
  std::string abort_reason;
  int first_success = -1;  // trial index of first success, -1 if none
};

// Full learning run for one seed: exploration episode, then
// fit / optimize / execute per trial. The policy warm-starts across
// trials; the optimizer state does not.
SeedResult run_experiment(const ExperimentConfig& cfg, uint64_t seed,
                          int workers,
                          const std::function<void(const std::string&)>& note = {});

}  // namespace vfrl
