#pragma once

#include <cstdint>
#include <string>

#include "vfrl/costs.hpp"
#include "vfrl/envs.hpp"
#include "vfrl/gp.hpp"
#include "vfrl/rollout.hpp"

namespace vfrl {

struct ExploreConfig {
  enum class Kind { filtered_noise, cosines };
  Kind kind = Kind::filtered_noise;
  double std = 4.0;        // target signal std before clamping
  double cutoff_hz = 1.5;  // one-pole low-pass cutoff (filtered noise)
  int n_components = 10;   // cosine components
  double freq_lo = 0.1;    // Hz, cosine frequency range
  double freq_hi = 2.0;
};

struct PolicyOptConfig {
  int iters = 2000;
  double lr = 0.01;
};

// Everything a training run needs, loadable from JSON. Unknown keys are
// a hard error so typos cannot silently fall back to defaults. The
// content hash covers every field except `seed`, which names the run,
// not the experiment.
struct ExperimentConfig {
  std::string env = "cartpole";  // cartpole | msd
  uint64_t seed = 0;
  int trials = 5;
  double trial_seconds = 3.0;
  double control_rate_hz = 30.0;
  // Skip the remaining trials once one succeeds. First-success metrics
  // are unchanged; later trials simply never run.
  bool stop_on_success = false;

  CartPoleParams cartpole;
  MassSpringDamperParams msd;

  HistoryConfig history;
  MeasureKind measure = MeasureKind::gaussian;
  Vec measure_param;
  FictKind fict = FictKind::gaussian;
  Vec fict_param;

  GPFitConfig gpfit;

  int n_basis = 200;
  Vec u_max;
  Vec center_lo, center_hi;  // policy center init ranges, per input dim
  PolicyOptConfig opt;

  int particles = 100;
  int chunks = 2;
  Vec q0_mean, q0_std;
  CostKind cost = CostKind::cartpole;

  ExploreConfig explore;

  int dq() const { return env == "msd" ? 1 : 2; }
  int du() const { return 1; }
  int horizon_steps() const {
    return static_cast<int>(std::lround(trial_seconds * control_rate_hz));
  }
};

// Fills env-dependent vector defaults (masks, noise params, center
// ranges) for fields the JSON omitted. Called by load_config; exposed
// for building configs in code.
void finalize_defaults(ExperimentConfig& cfg);

ExperimentConfig default_config(const std::string& env);

// Strict parse: unknown keys anywhere raise std::runtime_error naming
// the offending key.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

std::string config_to_json_text(const ExperimentConfig& cfg);

// FNV-1a 64 over the canonical (sorted-key, defaults-applied,
// seed-stripped) JSON text, as 16 hex chars.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace vfrl
