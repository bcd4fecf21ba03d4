#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vfrl/config.hpp"
#include "vfrl/trainer.hpp"

namespace vfrl {

// Output layout: <out>/<config_hash>/seed<N>/{report.txt, trials.csv,
// policy.json}, plus <out>/<config_hash>/config.json. A seed directory
// with a report.txt is treated as complete and skipped on rerun.

std::string seed_dir(const std::string& out_dir, const std::string& hash,
                     uint64_t seed);

// "7" -> {7}; "0..9" -> 0..9 inclusive; "1,4,7" -> the list.
std::vector<uint64_t> parse_seeds(const std::string& spec);

struct TrainOptions {
  std::string config_path;
  std::vector<uint64_t> seeds;
  std::string out_dir = "out";
  int workers = 1;
  bool debug_dump = false;
  bool quiet = false;
};
int cmd_train(const TrainOptions& opt);
// Same, with the config already loaded (ablation variants have no file).
int train_config(const ExperimentConfig& cfg, const TrainOptions& opt);

struct EvalOptions {
  std::string config_path;
  uint64_t seed = 0;
  int episodes = 1;  // replays with per-episode fresh measurement noise
  std::string out_dir = "out";
  std::string policy_path;  // default: trained policy for (config, seed)
  std::string dump_csv;
};
int cmd_eval(const EvalOptions& opt);

struct GpfitOptions {
  std::string config_path;
  uint64_t seed = 0;
  std::string data_path;  // trajectory CSV; empty: explore an episode here
  std::string val_path;   // held-out CSV; empty: self-generate or train stats
};
int cmd_gpfit(const GpfitOptions& opt);

struct AblateOptions {
  std::string config_path;
  std::vector<std::string> vary;  // each dotted.path=v1,v2,...; cartesian
  std::vector<uint64_t> seeds;
  std::string out_dir = "out";
  int workers = 1;
  bool quiet = false;
};
int cmd_ablate(const AblateOptions& opt);

struct ReportOptions {
  std::string out_dir = "out";
  std::string hash;  // empty: report every config under out_dir
};
int cmd_report(const ReportOptions& opt);

int run_cli(int argc, char** argv);

}  // namespace vfrl
