#include "vfrl/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vfrl/policy.hpp"
#include "vfrl/summary.hpp"

namespace fs = std::filesystem;

namespace vfrl {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string csv_meta(const std::string& hash, uint64_t seed) {
  return "config=" + hash + " seed=" + std::to_string(seed) + " vfrl=" +
         kToolVersion;
}

// Exit codes: 0 success, 1 usage error (bad flags, bad config, bad vary
// spec), 2 runtime fault (faulted episodes, provenance mismatch, missing
// or corrupt run artifacts).
constexpr int kExitUsage = 1;
constexpr int kExitFault = 2;

}  // namespace

std::string seed_dir(const std::string& out_dir, const std::string& hash,
                     uint64_t seed) {
  return out_dir + "/" + hash + "/seed" + std::to_string(seed);
}

std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> seeds;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const uint64_t a = std::stoull(spec.substr(0, dots));
    const uint64_t b = std::stoull(spec.substr(dots + 2));
    require(b >= a, "seed range must be ascending");
    for (uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  require(!seeds.empty(), "empty seed spec");
  return seeds;
}

int train_config(const ExperimentConfig& cfg, const TrainOptions& opt) {
  const std::string hash = config_hash(cfg);
  const std::string base = opt.out_dir + "/" + hash;
  fs::create_directories(base);
  if (!fs::exists(base + "/config.json")) {
    write_text(base + "/config.json", config_to_json_text(cfg) + "\n");
  }

  std::vector<uint64_t> seeds = opt.seeds;
  if (seeds.empty()) seeds.push_back(cfg.seed);

  for (uint64_t seed : seeds) {
    const std::string sd = seed_dir(opt.out_dir, hash, seed);
    if (fs::exists(sd + "/report.txt")) {
      if (!opt.quiet) {
        std::cout << "[" << hash << " seed " << seed
                  << "] complete, skipping\n";
      }
      continue;
    }
    fs::create_directories(sd);
    auto note = [&](const std::string& s) {
      if (!opt.quiet) {
        std::cout << "[" << hash << " seed " << seed << "] " << s << "\n"
                  << std::flush;
      }
    };
    SeedResult res = run_experiment(cfg, seed, opt.workers, note);
    write_trials_csv(sd + "/trials.csv", res.logs, csv_meta(hash, seed));
    save_policy(sd + "/policy.json", res.policy, hash);
    if (opt.debug_dump) {
      for (size_t k = 0; k < res.opt_traces.size(); ++k) {
        std::ostringstream os;
        os << "iter,J\n";
        for (size_t i = 0; i < res.opt_traces[k].size(); ++i) {
          char buf[64];
          snprintf(buf, sizeof buf, "%zu,%.17g\n", i, res.opt_traces[k][i]);
          os << buf;
        }
        write_text(sd + "/opt_trace_trial" + std::to_string(k + 1) + ".csv",
                   os.str());
      }
    }
    // Report last: its presence marks the seed complete.
    write_text(sd + "/report.txt", seed_report_text(cfg, hash, res));
    if (!opt.quiet) {
      std::cout << "[" << hash << " seed " << seed << "] done, first_success "
                << res.first_success << "\n";
    }
  }
  return 0;
}

int cmd_train(const TrainOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  return train_config(cfg, opt);
}

int cmd_eval(const EvalOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (opt.episodes < 1) {
    std::cerr << "--episodes must be at least 1\n";
    return kExitUsage;
  }
  const std::string hash = config_hash(cfg);
  std::string ppath = opt.policy_path;
  if (ppath.empty()) {
    ppath = seed_dir(opt.out_dir, hash, opt.seed) + "/policy.json";
  }
  std::string stored_hash;
  Policy pol = load_policy(ppath, &stored_hash);
  if (stored_hash != hash) {
    std::cerr << "policy " << ppath << " was trained under config "
              << stored_hash << ", not " << hash << "\n";
    return kExitFault;
  }
  auto plant = make_plant(cfg);
  std::vector<TrialLog> logs;
  int n_ok = 0;
  double cost_sum = 0.0;
  for (int k = 0; k < opt.episodes; ++k) {
    // Episode indices continue past the training trials so measurement
    // noise is fresh relative to anything seen during learning.
    const int episode = cfg.trials + 1 + k;
    TrialLog log = run_episode(*plant, cfg, &pol, nullptr, episode, opt.seed);
    const bool ok = trial_success(cfg, log);
    n_ok += ok ? 1 : 0;
    cost_sum += log.total_cost();
    std::cout << "eval seed " << opt.seed << " episode " << k << ": steps "
              << log.steps() << ", total_cost " << log.total_cost()
              << ", success " << (ok ? 1 : 0)
              << (log.faulted ? ", FAULTED" : "") << "\n";
    logs.push_back(std::move(log));
  }
  if (opt.episodes > 1) {
    std::cout << "eval summary: success " << n_ok << "/" << opt.episodes
              << ", mean_cost " << cost_sum / opt.episodes << "\n";
  }
  if (!opt.dump_csv.empty()) {
    write_trials_csv(opt.dump_csv, logs, csv_meta(hash, opt.seed));
  }
  return 0;
}

int cmd_gpfit(const GpfitOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  auto plant = make_plant(cfg);
  const int dq = plant->dq();
  const int du = plant->du();

  auto check_dims = [&](const std::vector<TrialLog>& logs,
                        const std::string& path) {
    for (const auto& lg : logs) {
      require(lg.q.cols() == dq && lg.u.cols() == du,
              path + " has " + std::to_string(lg.q.cols()) + "+" +
                  std::to_string(lg.u.cols()) +
                  " state+control columns, config expects " +
                  std::to_string(dq) + "+" + std::to_string(du));
    }
  };

  std::vector<TrialLog> train_logs, val_logs;
  std::string val_desc;
  if (!opt.data_path.empty()) {
    train_logs = read_trials_csv(opt.data_path);
    check_dims(train_logs, opt.data_path);
    if (!opt.val_path.empty()) {
      val_logs = read_trials_csv(opt.val_path);
      check_dims(val_logs, opt.val_path);
      val_desc = opt.val_path;
    } else {
      val_logs = train_logs;  // prediction error on the training pairs
      val_desc = "train";
    }
  } else {
    // No data given: explore two fresh episodes, fit on the first,
    // score on the second.
    const int H = cfg.horizon_steps();
    const Mat u_tr = explore_signal(cfg.explore, du, cfg.u_max,
                                    cfg.control_rate_hz, H, opt.seed, 0);
    TrialLog tl = run_episode(*plant, cfg, nullptr, &u_tr, 0, opt.seed);
    const Mat u_va = explore_signal(cfg.explore, du, cfg.u_max,
                                    cfg.control_rate_hz, H, opt.seed, 1);
    TrialLog vl = run_episode(*plant, cfg, nullptr, &u_va, 1, opt.seed);
    if (tl.faulted || vl.faulted) {
      std::cerr << "exploration episode faulted\n";
      return kExitFault;
    }
    train_logs.push_back(std::move(tl));
    val_logs.push_back(std::move(vl));
    val_desc = "fresh episode";
  }

  TrainingData tr = build_training_pairs(cfg.history, train_logs, dq, du);
  TrainingData va = build_training_pairs(cfg.history, val_logs, dq, du);
  require(tr.X.rows() > 0, "no training pairs in the data");
  GPModel model;
  model.fit(tr, cfg.gpfit);

  std::cout << "gpfit\n";
  std::cout << "vfrl_version: " << kToolVersion << "\n";
  std::cout << "config_hash: " << config_hash(cfg) << "\n";
  std::cout << "env: " << cfg.env << "\n";
  std::cout << "train_pairs: " << tr.X.rows() << "\n";
  std::cout << "val_pairs: " << va.X.rows() << " (" << val_desc << ")\n";
  for (int d = 0; d < dq; ++d) {
    Vec mean, var;
    model.predict(d, va.X, mean, var);
    const double rmse =
        std::sqrt((mean - va.Y.col(d)).squaredNorm() / mean.size());
    const double zero_rmse =
        std::sqrt(va.Y.col(d).squaredNorm() / va.Y.rows());
    double sigma = 0.0;
    if (cfg.measure == MeasureKind::gaussian) sigma = cfg.measure_param(d);
    std::cout << "rmse_dim_" << d << ": " << rmse << "\n";
    std::cout << "zero_rmse_dim_" << d << ": " << zero_rmse << "\n";
    std::cout << "sigma_dim_" << d << ": " << sigma << "\n";
    if (sigma > 0) {
      std::cout << "ratio_dim_" << d << ": " << rmse / sigma << "\n";
    }
    std::cout << "lml_dim_" << d << ": " << model.hyper(d).lml << "\n";
  }
  return 0;
}

namespace {

struct VaryAxis {
  std::vector<std::string> keys;  // dotted path, split
  std::string path;
  std::vector<std::string> values;
};

void set_json_path(nlohmann::json& j, const VaryAxis& ax,
                   const std::string& val) {
  nlohmann::json* node = &j;
  for (size_t i = 0; i + 1 < ax.keys.size(); ++i) node = &(*node)[ax.keys[i]];
  try {
    (*node)[ax.keys.back()] = nlohmann::json::parse(val);
  } catch (const nlohmann::json::parse_error&) {
    (*node)[ax.keys.back()] = val;  // bare string value
  }
}

}  // namespace

int cmd_ablate(const AblateOptions& opt) {
  std::string text;
  nlohmann::json base;
  try {
    text = read_text(opt.config_path);
    base = nlohmann::json::parse(text);
    config_from_json_text(text);  // validate the base before varying it
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<VaryAxis> axes;
  for (const std::string& spec : opt.vary) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--vary needs dotted.path=v1,v2,...\n";
      return kExitUsage;
    }
    VaryAxis ax;
    ax.path = spec.substr(0, eq);
    std::stringstream ks(ax.path);
    std::string tok;
    while (std::getline(ks, tok, '.')) ax.keys.push_back(tok);
    std::stringstream vs(spec.substr(eq + 1));
    while (std::getline(vs, tok, ',')) ax.values.push_back(tok);
    if (ax.keys.empty() || ax.values.empty()) {
      std::cerr << "--vary " << spec << ": empty path or value list\n";
      return kExitUsage;
    }
    axes.push_back(std::move(ax));
  }

  size_t n_variants = 1;
  for (const auto& ax : axes) n_variants *= ax.values.size();

  // Cartesian product, first axis slowest: --vary a=1,2 --vary b=0,1
  // runs (1,0) (1,1) (2,0) (2,1).
  for (size_t n = 0; n < n_variants; ++n) {
    nlohmann::json j = base;
    std::string label;
    size_t rem = n;
    for (size_t a = axes.size(); a-- > 0;) {
      const auto& ax = axes[a];
      const std::string& val = ax.values[rem % ax.values.size()];
      rem /= ax.values.size();
      set_json_path(j, ax, val);
      label = ax.path + "=" + val + (label.empty() ? "" : " ") + label;
    }
    ExperimentConfig cfg;
    try {
      cfg = config_from_json_text(j.dump());
    } catch (const std::exception& e) {
      std::cerr << "variant " << label << ": " << e.what() << "\n";
      return kExitUsage;
    }
    TrainOptions topt;
    topt.seeds = opt.seeds;
    topt.out_dir = opt.out_dir;
    topt.workers = opt.workers;
    topt.quiet = opt.quiet;
    std::cout << "variant " << label << " -> " << config_hash(cfg) << "\n";
    const int rc = train_config(cfg, topt);
    if (rc != 0) return rc;
  }
  return 0;
}

int cmd_report(const ReportOptions& opt) {
  std::vector<std::string> hashes;
  if (!opt.hash.empty()) {
    hashes.push_back(opt.hash);
  } else {
    if (!fs::is_directory(opt.out_dir)) {
      std::cerr << "no such directory: " << opt.out_dir << "\n";
      return kExitUsage;
    }
    for (const auto& e : fs::directory_iterator(opt.out_dir)) {
      if (e.is_directory() && fs::exists(e.path() / "config.json")) {
        hashes.push_back(e.path().filename().string());
      }
    }
    std::sort(hashes.begin(), hashes.end());
  }
  if (hashes.empty()) {
    std::cerr << "no runs found under " << opt.out_dir << "\n";
    return kExitFault;
  }

  for (const std::string& hash : hashes) {
    const std::string base = opt.out_dir + "/" + hash;
    ExperimentConfig cfg;
    try {
      cfg = load_config(base + "/config.json");
    } catch (const std::exception& e) {
      std::cerr << "config error under " << base << ": " << e.what() << "\n";
      return kExitFault;
    }
    std::vector<SeedOutcome> outcomes;
    std::vector<std::pair<uint64_t, std::string>> seeds;
    for (const auto& e : fs::directory_iterator(base)) {
      const std::string name = e.path().filename().string();
      if (e.is_directory() && name.rfind("seed", 0) == 0) {
        seeds.emplace_back(std::stoull(name.substr(4)), e.path().string());
      }
    }
    std::sort(seeds.begin(), seeds.end());
    for (const auto& [seed, dir] : seeds) {
      if (!fs::exists(dir + "/trials.csv")) continue;
      auto logs = read_trials_csv(dir + "/trials.csv");
      // Episodes cut short by a plant fault read back with fewer rows.
      for (auto& lg : logs) {
        if (lg.steps() < cfg.horizon_steps()) lg.faulted = true;
      }
      outcomes.push_back(outcome_from_logs(cfg, seed, logs));
    }
    const SweepSummary s = summarize(outcomes, cfg.trials);
    const std::string text = sweep_report_text(cfg, hash, s);
    std::cout << text;
    write_text(base + "/sweep.txt", text);
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"velocity-free model-based policy learning"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", seeds_spec = "0", policy_path,
              dump_csv, hash, data_path, val_path;
  std::vector<std::string> vary;
  int workers = 1, episodes = 1;
  bool debug_dump = false, quiet = false;
  uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "run the learning loop");
  train->add_option("--config", config_path, "experiment config JSON")
      ->required();
  train->add_option("--seed", seed, "single seed");
  train->add_option("--seeds", seeds_spec, "seed list: N, a..b, or a,b,c");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--workers", workers, "rollout worker threads");
  train->add_flag("--debug-dump", debug_dump, "dump optimizer traces");
  train->add_flag("--quiet", quiet, "suppress progress lines");

  auto* eval = app.add_subcommand("eval", "replay a trained policy");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--seed", seed);
  eval->add_option("--episodes", episodes, "number of replay episodes");
  eval->add_option("--out", out_dir);
  eval->add_option("--policy", policy_path, "explicit policy.json path");
  eval->add_option("--dump-csv", dump_csv, "write the episodes as CSV");

  auto* gpfit = app.add_subcommand(
      "gpfit", "fit a model and report per-dimension one-step error");
  gpfit->add_option("--config", config_path)->required();
  gpfit->add_option("--seed", seed);
  gpfit->add_option("--data", data_path,
                    "trajectory CSV to fit on (default: explore an episode)");
  gpfit->add_option("--val", val_path, "held-out trajectory CSV to score on");

  auto* ablate = app.add_subcommand("ablate", "train variants of one config");
  ablate->add_option("--config", config_path)->required();
  ablate
      ->add_option("--vary", vary,
                   "dotted.path=v1,v2,...; repeat for a cartesian grid")
      ->required();
  ablate->add_option("--seeds", seeds_spec);
  ablate->add_option("--out", out_dir);
  ablate->add_option("--workers", workers);
  ablate->add_flag("--quiet", quiet);

  auto* report = app.add_subcommand("report", "aggregate finished runs");
  report->add_option("--out", out_dir);
  report->add_option("--hash", hash, "restrict to one config hash");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      TrainOptions t;
      t.config_path = config_path;
      t.seeds = train->count("--seeds") ? parse_seeds(seeds_spec)
                : train->count("--seed") ? std::vector<uint64_t>{seed}
                                         : std::vector<uint64_t>{};
      t.out_dir = out_dir;
      t.workers = workers;
      t.debug_dump = debug_dump;
      t.quiet = quiet;
      return cmd_train(t);
    }
    if (eval->parsed()) {
      EvalOptions e;
      e.config_path = config_path;
      e.seed = seed;
      e.episodes = episodes;
      e.out_dir = out_dir;
      e.policy_path = policy_path;
      e.dump_csv = dump_csv;
      return cmd_eval(e);
    }
    if (gpfit->parsed()) {
      GpfitOptions g;
      g.config_path = config_path;
      g.seed = seed;
      g.data_path = data_path;
      g.val_path = val_path;
      return cmd_gpfit(g);
    }
    if (ablate->parsed()) {
      AblateOptions a;
      a.config_path = config_path;
      a.vary = vary;
      a.seeds = ablate->count("--seeds") ? parse_seeds(seeds_spec)
                                         : std::vector<uint64_t>{};
      a.out_dir = out_dir;
      a.workers = workers;
      a.quiet = quiet;
      return cmd_ablate(a);
    }
    if (report->parsed()) {
      ReportOptions r;
      r.out_dir = out_dir;
      r.hash = hash;
      return cmd_report(r);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFault;
  }
  return kExitUsage;
}

}  // namespace vfrl
