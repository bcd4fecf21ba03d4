#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vfrl/config.hpp"
#include "vfrl/dataset.hpp"
#include "vfrl/harness.hpp"
#include "vfrl/summary.hpp"

using namespace vfrl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

const char* kTinyMsd = R"({
  "env": "msd",
  "trials": 1,
  "trial_seconds": 1.0,
  "rollout": {"particles": 10, "chunks": 2},
  "policy": {"n_basis": 8, "opt_iters": 5},
  "model": {"fit_iters": 60}
})";

struct TmpDir {
  std::string path;
  explicit TmpDir(std::string p) : path(std::move(p)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("trials CSV round-trips bit-exactly") {
  std::vector<TrialLog> logs(2);
  logs[0].episode = 0;
  logs[0].q = Mat::Random(5, 2);
  logs[0].u = Mat::Random(5, 1);
  logs[0].cost = Vec::Random(5);
  logs[1].episode = 1;
  logs[1].q = Mat::Random(3, 2);  // truncated episode
  logs[1].u = Mat::Random(3, 1);
  logs[1].cost = Vec::Random(3);

  TmpDir tmp("harness_csv_tmp");
  const std::string path = tmp.path + "/trials.csv";
  write_trials_csv(path, logs);
  auto back = read_trials_csv(path);
  REQUIRE(back.size() == 2);
  for (int e = 0; e < 2; ++e) {
    CHECK(back[e].episode == logs[e].episode);
    CHECK((back[e].q - logs[e].q).norm() == 0.0);
    CHECK((back[e].u - logs[e].u).norm() == 0.0);
    CHECK((back[e].cost - logs[e].cost).norm() == 0.0);
  }
  const std::string header = trials_csv_header(2, 1);
  CHECK(slurp(path).substr(0, header.size()) == header);

  // A meta string becomes a leading comment line; readers skip it.
  write_trials_csv(path, logs, "config=abc seed=7 vfrl=x");
  CHECK(slurp(path).substr(0, 26) == "# config=abc seed=7 vfrl=x");
  auto back2 = read_trials_csv(path);
  REQUIRE(back2.size() == 2);
  CHECK((back2[1].q - logs[1].q).norm() == 0.0);
}

TEST_CASE("trials CSV rejects malformed input") {
  TmpDir tmp("harness_csv_bad");
  spit(tmp.path + "/bad1.csv", "nonsense,header\n1,2\n");
  CHECK_THROWS(read_trials_csv(tmp.path + "/bad1.csv"));
  spit(tmp.path + "/bad2.csv",
       trials_csv_header(1, 1) + "0,0,1.0,2.0,0.5\n0,2,1.0,2.0,0.5\n");
  CHECK_THROWS(read_trials_csv(tmp.path + "/bad2.csv"));  // t gap
}

TEST_CASE("config text round-trip is a fixpoint and hash ignores seed") {
  ExperimentConfig cfg = default_config("cartpole");
  const std::string text = config_to_json_text(cfg);
  ExperimentConfig cfg2 = config_from_json_text(text);
  CHECK(config_to_json_text(cfg2) == text);
  CHECK(config_hash(cfg2) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);

  ExperimentConfig reseeded = cfg;
  reseeded.seed = 999;
  CHECK(config_hash(reseeded) == config_hash(cfg));
  ExperimentConfig changed = cfg;
  changed.particles = 42;
  CHECK(config_hash(changed) != config_hash(cfg));
}

TEST_CASE("unknown config keys are named in the error") {
  CHECK_THROWS_WITH_AS(config_from_json_text("{\"partic\": 3}"),
                       doctest::Contains("partic"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      config_from_json_text("{\"rollout\": {\"particls\": 3}}"),
      doctest::Contains("particls"), std::runtime_error);
}

TEST_CASE("cart-pole center defaults follow the input layout") {
  ExperimentConfig cfg = default_config("cartpole");
  REQUIRE(cfg.center_lo.size() == 7);  // [p, sin, cos, dp, da, dp, da]
  CHECK(cfg.center_hi(0) == 1.0);
  CHECK(cfg.center_hi(3) == 0.15);
  CHECK(cfg.center_hi(4) == 0.4);
  CHECK(cfg.center_hi(5) == 0.15);
  CHECK(cfg.center_hi(6) == 0.4);
  CHECK((cfg.center_lo + cfg.center_hi).norm() == 0.0);  // symmetric
}

TEST_CASE("seed specs parse") {
  CHECK(parse_seeds("7") == std::vector<uint64_t>{7});
  CHECK(parse_seeds("0..3") == std::vector<uint64_t>({0, 1, 2, 3}));
  CHECK(parse_seeds("1,5,9") == std::vector<uint64_t>({1, 5, 9}));
  CHECK_THROWS(parse_seeds("9..3"));
  CHECK_THROWS(parse_seeds(""));
}

TEST_CASE("percentiles interpolate linearly") {
  CHECK(percentile({1, 2, 3, 4}, 50) == 2.5);
  CHECK(percentile({1, 2, 3, 4}, 0) == 1.0);
  CHECK(percentile({1, 2, 3, 4}, 100) == 4.0);
  CHECK(percentile({3, 1, 2}, 50) == 2.0);  // sorts internally
  CHECK(percentile({5}, 75) == 5.0);
  CHECK(percentile({0, 10}, 25) == 2.5);
}

TEST_CASE("wall-clock lines are stripped for comparisons") {
  const std::string rep =
      "header: x\nrow 1\n# wall clock\nwall_trial_1: fit 1 opt 2\n";
  CHECK(strip_wallclock(rep) == "header: x\nrow 1\n");
}

TEST_CASE("train writes the layout, resumes, and is worker-invariant") {
  TmpDir tmp("harness_train_tmp");
  const std::string cfg_path = tmp.path + "/tiny.json";
  spit(cfg_path, kTinyMsd);

  TrainOptions t;
  t.config_path = cfg_path;
  t.seeds = {0, 1};
  t.out_dir = tmp.path + "/outA";
  t.workers = 1;
  t.quiet = true;
  REQUIRE(cmd_train(t) == 0);

  ExperimentConfig cfg = load_config(cfg_path);
  const std::string hash = config_hash(cfg);
  const std::string base = t.out_dir + "/" + hash;
  REQUIRE(fs::exists(base + "/config.json"));
  for (int s = 0; s < 2; ++s) {
    const std::string sd = base + "/seed" + std::to_string(s);
    CHECK(fs::exists(sd + "/report.txt"));
    CHECK(fs::exists(sd + "/trials.csv"));
    CHECK(fs::exists(sd + "/policy.json"));
  }

  // Resume: a second invocation must not rewrite anything.
  const auto stamp = fs::last_write_time(base + "/seed0/report.txt");
  REQUIRE(cmd_train(t) == 0);
  CHECK(fs::last_write_time(base + "/seed0/report.txt") == stamp);

  // Same config, more workers: byte-identical logs and reports.
  TrainOptions t8 = t;
  t8.out_dir = tmp.path + "/outB";
  t8.workers = 4;
  REQUIRE(cmd_train(t8) == 0);
  const std::string baseB = t8.out_dir + "/" + hash;
  CHECK(slurp(base + "/seed0/trials.csv") ==
        slurp(baseB + "/seed0/trials.csv"));
  CHECK(slurp(base + "/seed0/policy.json") ==
        slurp(baseB + "/seed0/policy.json"));
  CHECK(strip_wallclock(slurp(base + "/seed0/report.txt")) ==
        strip_wallclock(slurp(baseB + "/seed0/report.txt")));

  // Artifacts carry provenance: config hash, seed, tool version.
  const std::string csv0 = slurp(base + "/seed0/trials.csv");
  CHECK(csv0.substr(0, 2) == "# ");
  CHECK(csv0.find("config=" + hash) != std::string::npos);
  CHECK(csv0.find("seed=0") != std::string::npos);
  CHECK(csv0.find("vfrl=") != std::string::npos);
  CHECK(slurp(base + "/seed0/report.txt").find("vfrl_version: ") !=
        std::string::npos);
  CHECK(slurp(base + "/seed0/policy.json").find("\"version\"") !=
        std::string::npos);

  // Aggregate report over the finished runs.
  ReportOptions r;
  r.out_dir = t.out_dir;
  CHECK(cmd_report(r) == 0);
  const std::string sweep = slurp(base + "/sweep.txt");
  CHECK(sweep.find("seeds: 2") != std::string::npos);
  CHECK(sweep.find("config_hash: " + hash) != std::string::npos);
  CHECK(sweep.find("cost_median") != std::string::npos);
  // Re-running the aggregation is byte-identical.
  CHECK(cmd_report(r) == 0);
  CHECK(slurp(base + "/sweep.txt") == sweep);

  // Eval loads the trained policy back under the same config; multiple
  // episodes land in one CSV with distinct episode indices.
  EvalOptions e;
  e.config_path = cfg_path;
  e.seed = 0;
  e.episodes = 2;
  e.out_dir = t.out_dir;
  e.dump_csv = tmp.path + "/eval.csv";
  CHECK(cmd_eval(e) == 0);
  auto eval_logs = read_trials_csv(e.dump_csv);
  REQUIRE(eval_logs.size() == 2);
  CHECK(eval_logs[0].episode != eval_logs[1].episode);
  CHECK(eval_logs[0].steps() == cfg.horizon_steps());

  // gpfit consumes a stored trajectory CSV.
  GpfitOptions g;
  g.config_path = cfg_path;
  g.data_path = base + "/seed0/trials.csv";
  CHECK(cmd_gpfit(g) == 0);
  GpfitOptions g2 = g;
  g2.val_path = e.dump_csv;
  CHECK(cmd_gpfit(g2) == 0);

  // A different config hash must refuse the stored policy.
  const std::string cfg2_path = tmp.path + "/tiny2.json";
  spit(cfg2_path, std::string(kTinyMsd).replace(
                      std::string(kTinyMsd).find("\"trials\": 1"), 11,
                      "\"trials\": 2"));
  EvalOptions e2;
  e2.config_path = cfg2_path;
  e2.seed = 0;
  e2.out_dir = t.out_dir;
  e2.policy_path = base + "/seed0/policy.json";
  CHECK(cmd_eval(e2) == 2);
}

TEST_CASE("ablate trains every variant under its own hash") {
  TmpDir tmp("harness_ablate_tmp");
  const std::string cfg_path = tmp.path + "/tiny.json";
  spit(cfg_path, kTinyMsd);
  AblateOptions a;
  a.config_path = cfg_path;
  a.vary = {"history.differences=true,false"};
  a.seeds = {0};
  a.out_dir = tmp.path + "/out";
  a.quiet = true;
  REQUIRE(cmd_ablate(a) == 0);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(a.out_dir)) {
    if (e.is_directory() && fs::exists(e.path() / "config.json")) ++dirs;
  }
  CHECK(dirs == 2);
}

TEST_CASE("repeated vary flags span the cartesian grid") {
  TmpDir tmp("harness_ablate_grid");
  const std::string cfg_path = tmp.path + "/tiny.json";
  spit(cfg_path, kTinyMsd);
  AblateOptions a;
  a.config_path = cfg_path;
  a.vary = {"history.m_q=1,2", "history.m_u=0,1"};
  a.seeds = {0};
  a.out_dir = tmp.path + "/out";
  a.quiet = true;
  REQUIRE(cmd_ablate(a) == 0);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(a.out_dir)) {
    if (e.is_directory() && fs::exists(e.path() / "config.json")) ++dirs;
  }
  CHECK(dirs == 4);

  AblateOptions bad = a;
  bad.vary = {"history.m_q"};  // missing =values
  CHECK(cmd_ablate(bad) == 1);
}

TEST_CASE("cli dispatch and exit codes") {
  {
    // Missing subcommand is a usage error.
    const char* argv[] = {"vfrl"};
    CHECK(run_cli(1, const_cast<char**>(argv)) == 1);
  }
  {
    // Unreadable or invalid config is a usage error.
    const char* argv[] = {"vfrl", "train", "--config", "no_such_file.json"};
    CHECK(run_cli(4, const_cast<char**>(argv)) == 1);
  }
  {
    const char* argv[] = {"vfrl", "report", "--out", "no_such_dir_xyz"};
    CHECK(run_cli(4, const_cast<char**>(argv)) == 1);
  }
  {
    TmpDir tmp("harness_cli_tmp");
    spit(tmp.path + "/bad.json", "{\"unknown_key\": 1}");
    const char* argv[] = {"vfrl", "train", "--config",
                          "harness_cli_tmp/bad.json"};
    CHECK(run_cli(4, const_cast<char**>(argv)) == 1);
  }
  {
    // Aggregating an empty output directory is a runtime fault.
    TmpDir tmp("harness_cli_empty");
    const char* argv[] = {"vfrl", "report", "--out", "harness_cli_empty"};
    CHECK(run_cli(4, const_cast<char**>(argv)) == 2);
  }
}

TEST_CASE("gpfit command runs on the mass-spring-damper") {
  TmpDir tmp("harness_gpfit_tmp");
  const std::string cfg_path = tmp.path + "/tiny.json";
  spit(cfg_path, kTinyMsd);
  GpfitOptions g;
  g.config_path = cfg_path;
  g.seed = 0;
  CHECK(cmd_gpfit(g) == 0);
}
