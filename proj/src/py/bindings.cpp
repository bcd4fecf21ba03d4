#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vfrl/config.hpp"
#include "vfrl/gp.hpp"
#include "vfrl/policy.hpp"
#include "vfrl/rollout.hpp"
#include "vfrl/trainer.hpp"

namespace py = pybind11;
using namespace vfrl;

namespace {

Policy make_policy(const ExperimentConfig& cfg, uint64_t seed) {
  PolicyInit pinit;
  pinit.n_basis = cfg.n_basis;
  pinit.u_max = cfg.u_max;
  pinit.center_lo = cfg.center_lo;
  pinit.center_hi = cfg.center_hi;
  return init_policy(pinit, policy_input_dim(cfg.history, cfg.dq()), cfg.du(),
                     seed);
}

TrialLog episode(const ExperimentConfig& cfg, const Policy* policy,
                 int episode_idx, uint64_t seed) {
  auto plant = make_plant(cfg);
  if (policy) {
    return run_episode(*plant, cfg, policy, nullptr, episode_idx, seed);
  }
  const Mat u = explore_signal(cfg.explore, cfg.du(), cfg.u_max,
                               cfg.control_rate_hz, cfg.horizon_steps(), seed,
                               static_cast<uint32_t>(episode_idx));
  return run_episode(*plant, cfg, nullptr, &u, episode_idx, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Velocity-free model-based policy search core";
  m.attr("__version__") = kToolVersion;

  py::register_exception<std::invalid_argument>(m, "UsageError",
                                                PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def_property_readonly("env",
                             [](const ExperimentConfig& c) { return c.env; })
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_property_readonly(
          "trials", [](const ExperimentConfig& c) { return c.trials; })
      .def_property_readonly(
          "particles", [](const ExperimentConfig& c) { return c.particles; })
      .def_property_readonly(
          "horizon_steps",
          [](const ExperimentConfig& c) { return c.horizon_steps(); })
      .def_property_readonly(
          "dq", [](const ExperimentConfig& c) { return c.dq(); })
      .def_property_readonly(
          "du", [](const ExperimentConfig& c) { return c.du(); })
      .def("__repr__", [](const ExperimentConfig& c) {
        return "Config(env=" + c.env + ", hash=" + config_hash(c) + ")";
      });

  m.def("default_config", &default_config, py::arg("env") = "cartpole");
  m.def("load_config", &load_config, py::arg("path"),
        "Parse a config file; unknown keys raise.");
  m.def("config_from_json", &config_from_json_text, py::arg("text"));
  m.def("config_to_json", &config_to_json_text, py::arg("config"),
        "Canonical JSON with every default applied.");
  m.def("config_hash", &config_hash, py::arg("config"),
        "16-hex content hash; the seed is excluded.");

  py::class_<TrialLog>(m, "EpisodeLog")
      .def(py::init<>())
      .def_readwrite("episode", &TrialLog::episode)
      .def_readwrite("q", &TrialLog::q)
      .def_readwrite("u", &TrialLog::u)
      .def_readwrite("cost", &TrialLog::cost)
      .def_readwrite("faulted", &TrialLog::faulted)
      .def_property_readonly("steps", &TrialLog::steps)
      .def_property_readonly("total_cost", &TrialLog::total_cost);

  py::class_<GPModel>(m, "Model")
      .def(py::init<>())
      .def(
          "fit",
          [](GPModel& gp, const Mat& X, const Mat& Y, int iters, double lr) {
            TrainingData d;
            d.X = X;
            d.Y = Y;
            GPFitConfig fc;
            fc.iters = iters;
            fc.lr = lr;
            gp.fit(d, fc);
          },
          py::arg("X"), py::arg("Y"), py::arg("iters") = 1500,
          py::arg("lr") = 0.01, py::call_guard<py::gil_scoped_release>())
      .def(
          "predict",
          [](const GPModel& gp, int dim, const Mat& X) {
            Vec mean, var;
            gp.predict(dim, X, mean, var);
            return py::make_tuple(mean, var);
          },
          py::arg("dim"), py::arg("X"),
          "Posterior (mean, var) of one output dim at raw input rows.")
      .def_property_readonly("fitted", &GPModel::fitted)
      .def_property_readonly("output_dims", &GPModel::output_dims)
      .def_property_readonly("input_dim", &GPModel::input_dim);

  py::class_<Policy>(m, "Policy")
      .def_readwrite("w", &Policy::w)
      .def_readwrite("A", &Policy::A)
      .def_readwrite("log_s2", &Policy::log_s2)
      .def_readwrite("u_max", &Policy::u_max)
      .def_property_readonly("n_basis", &Policy::n_basis)
      .def_property_readonly("input_dim", &Policy::input_dim)
      .def_property_readonly("du", &Policy::du)
      .def("__call__", &Policy::eval, py::arg("x"),
           "Control for one policy input vector; |u| < u_max.")
      .def(
          "save",
          [](const Policy& p, const std::string& path,
             const std::string& hash) { save_policy(path, p, hash); },
          py::arg("path"), py::arg("config_hash"));

  m.def("init_policy", &make_policy, py::arg("config"), py::arg("seed"),
        "Fresh policy for the config's input layout; deterministic in seed.");
  m.def(
      "load_policy",
      [](const std::string& path) {
        std::string hash;
        Policy p = load_policy(path, &hash);
        return py::make_tuple(p, hash);
      },
      py::arg("path"), "Returns (policy, config_hash it was trained under).");

  m.def(
      "run_episode",
      [](const ExperimentConfig& cfg, const Policy* policy, int episode_idx,
         uint64_t seed) { return episode(cfg, policy, episode_idx, seed); },
      py::arg("config"), py::arg("policy") = nullptr, py::arg("episode") = 0,
      py::arg("seed") = 0,
      "One plant episode under the policy, or under the exploration signal "
      "when policy is None.",
      py::call_guard<py::gil_scoped_release>());
  m.def("trial_success", &trial_success, py::arg("config"), py::arg("log"),
        py::arg("window") = 30);

  m.def(
      "training_pairs",
      [](const ExperimentConfig& cfg, const std::vector<TrialLog>& logs) {
        TrainingData d =
            build_training_pairs(cfg.history, logs, cfg.dq(), cfg.du());
        return py::make_tuple(d.X, d.Y);
      },
      py::arg("config"), py::arg("logs"),
      "Windowed (X, Y) pairs; targets are next-step position increments.");

  m.def(
      "rollout_cost",
      [](const GPModel& model, const Policy& policy,
         const ExperimentConfig& cfg, uint64_t seed, uint32_t iteration) {
        return rollout_cost(model, policy, make_rollout_config(cfg), seed,
                            iteration);
      },
      py::arg("model"), py::arg("policy"), py::arg("config"),
      py::arg("seed") = 0, py::arg("iteration") = 0,
      "Expected particle cost of the policy under the learned model.",
      py::call_guard<py::gil_scoped_release>());

  py::class_<TrialRecord>(m, "TrialRecord")
      .def_readonly("trial", &TrialRecord::trial)
      .def_readonly("explore", &TrialRecord::explore)
      .def_readonly("total_cost", &TrialRecord::total_cost)
      .def_readonly("success", &TrialRecord::success)
      .def_readonly("faulted", &TrialRecord::faulted)
      .def_readonly("opt_iters", &TrialRecord::opt_iters)
      .def_readonly("best_J", &TrialRecord::best_J);

  py::class_<SeedResult>(m, "SeedResult")
      .def_readonly("seed", &SeedResult::seed)
      .def_readonly("logs", &SeedResult::logs)
      .def_readonly("records", &SeedResult::records)
      .def_readonly("policy", &SeedResult::policy)
      .def_readonly("aborted", &SeedResult::aborted)
      .def_readonly("abort_reason", &SeedResult::abort_reason)
      .def_readonly("first_success", &SeedResult::first_success);

  m.def(
      "run_experiment",
      [](const ExperimentConfig& cfg, uint64_t seed, int workers) {
        return run_experiment(cfg, seed, workers);
      },
      py::arg("config"), py::arg("seed") = 0, py::arg("workers") = 1,
      "Full learning run for one seed: explore, then fit / optimize / "
      "execute per trial.",
      py::call_guard<py::gil_scoped_release>());
}
