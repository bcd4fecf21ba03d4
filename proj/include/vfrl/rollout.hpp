#pragma once

#include <cstdint>

#include "vfrl/costs.hpp"
#include "vfrl/gp.hpp"
#include "vfrl/policy.hpp"

namespace vfrl {

// Fictitious measurement noise injected into policy inputs during
// simulated rollouts, mimicking the sensor the executed system will
// have. The dynamics model always sees the clean particle positions.
enum class FictKind { none, gaussian, uniform };

struct RolloutConfig {
  int particles = 100;  // M
  int horizon = 90;     // cost terms per rollout; horizon-1 transitions
  // Particles are split into this many contiguous chunks, each with its
  // own tape. The count is fixed by configuration, never by worker
  // count, so results are bit-identical for any parallelism level.
  int chunks = 2;
  CostKind cost = CostKind::cartpole;
  HistoryConfig history;
  Vec q0_mean;  // dq
  Vec q0_std;   // dq, gaussian spread of the initial position
  FictKind fict = FictKind::none;
  Vec fict_param;  // std per dim (gaussian) or half-width (uniform)
};

struct RolloutResult {
  double J = 0.0;
  Mat grad_w;
  Mat grad_A;
  Vec grad_log_s2;
  bool finite = false;
};

// Expected cumulative cost of the policy under the learned model,
// estimated with M reparametrized particles, and its gradient with
// respect to the policy parameters. Draws are keyed by (seed, iteration,
// t, m, d), so one iteration sees one fixed noise realization.
RolloutResult rollout_cost_grad(const GPModel& model, const Policy& policy,
                                const RolloutConfig& cfg, uint64_t seed,
                                uint32_t iteration, int workers);

// Forward pass only; same value as rollout_cost_grad().J.
double rollout_cost(const GPModel& model, const Policy& policy,
                    const RolloutConfig& cfg, uint64_t seed,
                    uint32_t iteration);

}  // namespace vfrl
