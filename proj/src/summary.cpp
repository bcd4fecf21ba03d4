#include "vfrl/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace vfrl {

double percentile(std::vector<double> v, double p) {
  require(!v.empty(), "percentile of empty set");
  require(p >= 0.0 && p <= 100.0, "percentile in [0,100]");
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

namespace {
std::string fmt(double x) {
  char buf[64];
  snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

std::string seed_report_text(const ExperimentConfig& cfg,
                             const std::string& hash, const SeedResult& res) {
  std::ostringstream os;
  os << "vfrl seed report\n";
  os << "vfrl_version: " << kToolVersion << "\n";
  os << "config_hash: " << hash << "\n";
  os << "env: " << cfg.env << "\n";
  os << "seed: " << res.seed << "\n";
  os << "trials: " << cfg.trials << "\n";
  os << "horizon_steps: " << cfg.horizon_steps() << "\n";
  os << "particles: " << cfg.particles << "\n";
  os << "chunks: " << cfg.chunks << "\n";
  os << "history: m_q=" << cfg.history.m_q << " m_u=" << cfg.history.m_u
     << " differences=" << (cfg.history.differences ? 1 : 0) << "\n";
  os << "trial explore steps total_cost success faulted opt_iters"
        " nan_rejects best_J\n";
  for (const auto& r : res.records) {
    const auto& lg = res.logs.at(static_cast<size_t>(r.trial));
    os << r.trial << " " << (r.explore ? 1 : 0) << " " << lg.steps() << " "
       << fmt(r.total_cost) << " " << (r.success ? 1 : 0) << " "
       << (r.faulted ? 1 : 0) << " " << r.opt_iters << " " << r.nan_rejects
       << " " << fmt(r.best_J) << "\n";
  }
  os << "first_success: " << res.first_success << "\n";
  os << "aborted: " << (res.aborted ? 1 : 0) << "\n";
  if (res.aborted) os << "abort_reason: " << res.abort_reason << "\n";
  // Wall-clock lines last; comparisons drop everything from the marker on.
  os << "# wall clock\n";
  for (const auto& r : res.records) {
    if (r.explore) continue;
    os << "wall_trial_" << r.trial << ": fit " << r.fit_seconds << " opt "
       << r.opt_seconds << "\n";
  }
  return os.str();
}

std::string strip_wallclock(const std::string& report_text) {
  std::istringstream is(report_text);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    if (line == "# wall clock") break;
    if (line.rfind("wall_", 0) == 0) continue;
    os << line << "\n";
  }
  return os.str();
}

SeedOutcome outcome_from_logs(const ExperimentConfig& cfg, uint64_t seed,
                              const std::vector<TrialLog>& logs) {
  SeedOutcome o;
  o.seed = seed;
  for (size_t i = 0; i < logs.size(); ++i) {
    const bool s = trial_success(cfg, logs[i]);
    o.success.push_back(s ? 1 : 0);
    o.cost.push_back(logs[i].total_cost());
    if (s && i > 0 && o.first_success < 0) o.first_success = static_cast<int>(i);
  }
  return o;
}

SweepSummary summarize(const std::vector<SeedOutcome>& outcomes, int trials) {
  SweepSummary s;
  s.n_seeds = static_cast<int>(outcomes.size());
  s.trials = trials;
  const size_t nt = static_cast<size_t>(trials) + 1;
  s.successes_by_trial.assign(nt, 0);
  s.cost_median.assign(nt, std::numeric_limits<double>::quiet_NaN());
  s.cost_p5 = s.cost_median;
  s.cost_p95 = s.cost_median;
  for (const auto& o : outcomes) {
    for (size_t t = 0; t < o.success.size() && t < nt; ++t) {
      if (o.success[t]) ++s.successes_by_trial[t];
    }
    const double fs =
        o.first_success > 0 ? o.first_success : static_cast<double>(trials + 1);
    s.first_success_all.push_back(fs);
    if (o.success.size() > static_cast<size_t>(trials) &&
        o.success[static_cast<size_t>(trials)]) {
      ++s.n_success_final;
    }
  }
  for (size_t t = 0; t < nt; ++t) {
    std::vector<double> costs;
    for (const auto& o : outcomes) {
      if (t < o.cost.size()) costs.push_back(o.cost[t]);
    }
    if (!costs.empty()) {
      s.cost_median[t] = percentile(costs, 50.0);
      s.cost_p5[t] = percentile(costs, 5.0);
      s.cost_p95[t] = percentile(costs, 95.0);
    }
  }
  s.median_first_success =
      s.first_success_all.empty() ? 0.0 : percentile(s.first_success_all, 50.0);
  return s;
}

std::string sweep_report_text(const ExperimentConfig& cfg,
                              const std::string& hash, const SweepSummary& s) {
  std::ostringstream os;
  os << "vfrl sweep report\n";
  os << "vfrl_version: " << kToolVersion << "\n";
  os << "config_hash: " << hash << "\n";
  os << "env: " << cfg.env << "\n";
  os << "seeds: " << s.n_seeds << "\n";
  os << "trials: " << s.trials << "\n";
  os << "trial successes cost_median cost_p5 cost_p95\n";
  for (int t = 0; t <= s.trials; ++t) {
    os << t << " " << s.successes_by_trial[t] << "/" << s.n_seeds << " "
       << fmt(s.cost_median[t]) << " " << fmt(s.cost_p5[t]) << " "
       << fmt(s.cost_p95[t]) << "\n";
  }
  os << "final_trial_successes: " << s.n_success_final << " / " << s.n_seeds
     << "\n";
  os << "median_first_success: " << s.median_first_success
     << "  (never counted as " << (s.trials + 1) << ")\n";
  return os.str();
}

}  // namespace vfrl
