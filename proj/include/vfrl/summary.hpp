#pragma once

#include <string>
#include <vector>

#include "vfrl/config.hpp"
#include "vfrl/trainer.hpp"

namespace vfrl {

// Linear-interpolation percentile: position (n-1)*p/100 on the sorted
// values. p in [0, 100].
double percentile(std::vector<double> v, double p);

// Per-seed text report. Deterministic except for the wall-clock block,
// which strip_wallclock() removes for run-to-run comparisons.
std::string seed_report_text(const ExperimentConfig& cfg,
                             const std::string& hash, const SeedResult& res);

std::string strip_wallclock(const std::string& report_text);

struct SeedOutcome {
  uint64_t seed = 0;
  std::vector<char> success;   // per episode, index 0 = exploration
  std::vector<double> cost;    // cumulative executed cost per episode
  int first_success = -1;      // trial index, -1 if never
  bool aborted = false;
};

// Recomputes episode successes and costs from a stored episode log.
SeedOutcome outcome_from_logs(const ExperimentConfig& cfg, uint64_t seed,
                              const std::vector<TrialLog>& logs);

struct SweepSummary {
  int n_seeds = 0;
  int trials = 0;
  std::vector<int> successes_by_trial;    // [0..trials]
  std::vector<double> cost_median;        // [0..trials], across seeds
  std::vector<double> cost_p5, cost_p95;  // 5th / 95th percentile
  double median_first_success = 0;        // failures count as trials+1
  std::vector<double> first_success_all;  // per seed, trials+1 if never
  int n_success_final = 0;                // seeds succeeding at last trial
};

SweepSummary summarize(const std::vector<SeedOutcome>& outcomes, int trials);

std::string sweep_report_text(const ExperimentConfig& cfg,
                              const std::string& hash, const SweepSummary& s);

}  // namespace vfrl
