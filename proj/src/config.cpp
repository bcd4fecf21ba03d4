#include "vfrl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vfrl {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      throw std::runtime_error("unknown config key: " + where + it.key());
    }
  }
}

Vec get_vec(const json& j, const char* key, const Vec& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

MeasureKind measure_kind_from(const std::string& s, const std::string& where) {
  if (s == "none") return MeasureKind::none;
  if (s == "gaussian") return MeasureKind::gaussian;
  if (s == "quantize") return MeasureKind::quantize;
  throw std::runtime_error("bad " + where + " kind: " + s);
}

std::string measure_kind_name(MeasureKind k) {
  switch (k) {
    case MeasureKind::none: return "none";
    case MeasureKind::gaussian: return "gaussian";
    case MeasureKind::quantize: return "quantize";
  }
  return "none";
}

FictKind fict_kind_from(const std::string& s) {
  if (s == "none") return FictKind::none;
  if (s == "gaussian") return FictKind::gaussian;
  if (s == "uniform") return FictKind::uniform;
  throw std::runtime_error("bad fictitious kind: " + s);
}

std::string fict_kind_name(FictKind k) {
  switch (k) {
    case FictKind::none: return "none";
    case FictKind::gaussian: return "gaussian";
    case FictKind::uniform: return "uniform";
  }
  return "none";
}

CostKind cost_kind_from(const std::string& s) {
  if (s == "cartpole") return CostKind::cartpole;
  if (s == "furuta") return CostKind::furuta;
  if (s == "posexp") return CostKind::posexp;
  throw std::runtime_error("bad cost kind: " + s);
}

std::string cost_kind_name(CostKind k) {
  switch (k) {
    case CostKind::cartpole: return "cartpole";
    case CostKind::furuta: return "furuta";
    case CostKind::posexp: return "posexp";
  }
  return "cartpole";
}

}  // namespace

void finalize_defaults(ExperimentConfig& cfg) {
  const int dq = cfg.dq();
  const int du = cfg.du();
  if (cfg.history.angular.empty()) {
    cfg.history.angular.assign(dq, 0);
    if (cfg.env == "cartpole") cfg.history.angular[1] = 1;
  }
  require(static_cast<int>(cfg.history.angular.size()) == dq,
          "history.angular length");

  auto fill = [&](Vec& v, std::initializer_list<double> cart, double msd_val,
                  int n) {
    if (v.size() > 0) return;
    v.resize(n);
    if (cfg.env == "cartpole") {
      require(static_cast<int>(cart.size()) == n, "default size");
      int i = 0;
      for (double x : cart) v(i++) = x;
    } else {
      v.setConstant(msd_val);
    }
  };

  fill(cfg.measure_param, {1e-3, 2e-3}, 1e-3, dq);
  fill(cfg.fict_param, {1e-3, 2e-3}, 1e-3, dq);
  fill(cfg.u_max, {10.0}, 10.0, du);
  fill(cfg.q0_mean, {0.0, 0.0}, 0.0, dq);
  fill(cfg.q0_std, {1e-3, 2e-3}, 1e-3, dq);

  const int pdim = policy_input_dim(cfg.history, dq);
  if (cfg.center_lo.size() == 0) {
    cfg.center_lo.resize(pdim);
    cfg.center_hi.resize(pdim);
    // Position block: expanded coordinates, all order one.
    const int ed = expanded_dim(cfg.history, dq);
    for (int i = 0; i < ed; ++i) {
      cfg.center_lo(i) = -1.0;
      cfg.center_hi(i) = 1.0;
    }
    if (cfg.history.differences) {
      // One-step increments at the control rate: position dims move a
      // few m/s at most, angles a few rad/s.
      for (int s = 0; s < cfg.history.m_q; ++s) {
        for (int d = 0; d < dq; ++d) {
          double r = cfg.history.angular[d] ? 0.4 : 0.15;
          cfg.center_lo(ed + s * dq + d) = -r;
          cfg.center_hi(ed + s * dq + d) = r;
        }
      }
    } else {
      for (int i = ed; i < pdim; ++i) {
        cfg.center_lo(i) = -1.0;
        cfg.center_hi(i) = 1.0;
      }
    }
  }
  require(cfg.center_lo.size() == pdim && cfg.center_hi.size() == pdim,
          "policy center range length");
  require(cfg.measure_param.size() == dq, "measure param length");
  require(cfg.fict_param.size() == dq || cfg.fict == FictKind::none,
          "fictitious param length");
  require(cfg.u_max.size() == du, "u_max length");
  require(cfg.q0_mean.size() == dq && cfg.q0_std.size() == dq, "q0 length");
}

ExperimentConfig default_config(const std::string& env) {
  ExperimentConfig cfg;
  cfg.env = env;
  if (env == "msd") {
    cfg.cost = CostKind::posexp;
    cfg.trials = 3;
  } else {
    require(env == "cartpole", "env must be cartpole or msd");
  }
  finalize_defaults(cfg);
  return cfg;
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j = json::parse(text);
  check_keys(j, "", {"env", "seed", "trials", "trial_seconds",
                     "control_rate_hz", "stop_on_success", "plant", "history",
                     "measure", "fictitious", "model", "policy", "rollout",
                     "cost", "explore"});
  ExperimentConfig cfg;
  cfg.env = j.value("env", cfg.env);
  require(cfg.env == "cartpole" || cfg.env == "msd",
          "env must be cartpole or msd");
  if (cfg.env == "msd") cfg.cost = CostKind::posexp;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.trial_seconds = j.value("trial_seconds", cfg.trial_seconds);
  cfg.control_rate_hz = j.value("control_rate_hz", cfg.control_rate_hz);
  cfg.stop_on_success = j.value("stop_on_success", cfg.stop_on_success);

  if (j.contains("plant")) {
    const auto& p = j.at("plant");
    if (cfg.env == "cartpole") {
      check_keys(p, "plant.",
                 {"cart_mass", "pole_mass", "pole_half_length", "gravity",
                  "cart_friction", "pivot_friction", "substeps"});
      auto& c = cfg.cartpole;
      c.cart_mass = p.value("cart_mass", c.cart_mass);
      c.pole_mass = p.value("pole_mass", c.pole_mass);
      c.pole_half_length = p.value("pole_half_length", c.pole_half_length);
      c.gravity = p.value("gravity", c.gravity);
      c.cart_friction = p.value("cart_friction", c.cart_friction);
      c.pivot_friction = p.value("pivot_friction", c.pivot_friction);
      c.substeps = p.value("substeps", c.substeps);
    } else {
      check_keys(p, "plant.", {"mass", "stiffness", "damping"});
      auto& m = cfg.msd;
      m.mass = p.value("mass", m.mass);
      m.stiffness = p.value("stiffness", m.stiffness);
      m.damping = p.value("damping", m.damping);
    }
  }

  if (j.contains("history")) {
    const auto& h = j.at("history");
    check_keys(h, "history.", {"m_q", "m_u", "differences", "angular"});
    cfg.history.m_q = h.value("m_q", cfg.history.m_q);
    cfg.history.m_u = h.value("m_u", cfg.history.m_u);
    cfg.history.differences = h.value("differences", cfg.history.differences);
    if (h.contains("angular")) {
      cfg.history.angular.clear();
      for (bool b : h.at("angular")) cfg.history.angular.push_back(b ? 1 : 0);
    }
  }

  if (j.contains("measure")) {
    const auto& m = j.at("measure");
    check_keys(m, "measure.", {"kind", "param"});
    cfg.measure = measure_kind_from(m.value("kind", "gaussian"), "measure");
    cfg.measure_param = get_vec(m, "param", cfg.measure_param);
  }
  if (j.contains("fictitious")) {
    const auto& f = j.at("fictitious");
    check_keys(f, "fictitious.", {"kind", "param"});
    cfg.fict = fict_kind_from(f.value("kind", "gaussian"));
    cfg.fict_param = get_vec(f, "param", cfg.fict_param);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model.", {"fit_iters", "fit_lr", "noise_init_frac"});
    cfg.gpfit.iters = m.value("fit_iters", cfg.gpfit.iters);
    cfg.gpfit.lr = m.value("fit_lr", cfg.gpfit.lr);
    cfg.gpfit.noise_init_frac =
        m.value("noise_init_frac", cfg.gpfit.noise_init_frac);
  }

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    check_keys(p, "policy.",
               {"n_basis", "u_max", "center_lo", "center_hi", "opt_iters",
                "opt_lr"});
    cfg.n_basis = p.value("n_basis", cfg.n_basis);
    cfg.u_max = get_vec(p, "u_max", cfg.u_max);
    cfg.center_lo = get_vec(p, "center_lo", cfg.center_lo);
    cfg.center_hi = get_vec(p, "center_hi", cfg.center_hi);
    cfg.opt.iters = p.value("opt_iters", cfg.opt.iters);
    cfg.opt.lr = p.value("opt_lr", cfg.opt.lr);
  }

  if (j.contains("rollout")) {
    const auto& r = j.at("rollout");
    check_keys(r, "rollout.",
               {"particles", "chunks", "q0_mean", "q0_std"});
    cfg.particles = r.value("particles", cfg.particles);
    cfg.chunks = r.value("chunks", cfg.chunks);
    cfg.q0_mean = get_vec(r, "q0_mean", cfg.q0_mean);
    cfg.q0_std = get_vec(r, "q0_std", cfg.q0_std);
  }

  if (j.contains("cost")) cfg.cost = cost_kind_from(j.at("cost"));

  if (j.contains("explore")) {
    const auto& e = j.at("explore");
    check_keys(e, "explore.",
               {"kind", "std", "cutoff_hz", "n_components", "freq_lo",
                "freq_hi"});
    std::string k = e.value("kind", "filtered_noise");
    if (k == "filtered_noise") {
      cfg.explore.kind = ExploreConfig::Kind::filtered_noise;
    } else if (k == "cosines") {
      cfg.explore.kind = ExploreConfig::Kind::cosines;
    } else {
      throw std::runtime_error("bad explore kind: " + k);
    }
    cfg.explore.std = e.value("std", cfg.explore.std);
    cfg.explore.cutoff_hz = e.value("cutoff_hz", cfg.explore.cutoff_hz);
    cfg.explore.n_components = e.value("n_components", cfg.explore.n_components);
    cfg.explore.freq_lo = e.value("freq_lo", cfg.explore.freq_lo);
    cfg.explore.freq_hi = e.value("freq_hi", cfg.explore.freq_hi);
  }

  finalize_defaults(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["env"] = cfg.env;
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["trial_seconds"] = cfg.trial_seconds;
  j["control_rate_hz"] = cfg.control_rate_hz;
  j["stop_on_success"] = cfg.stop_on_success;
  if (cfg.env == "cartpole") {
    const auto& c = cfg.cartpole;
    j["plant"] = {{"cart_mass", c.cart_mass},
                  {"pole_mass", c.pole_mass},
                  {"pole_half_length", c.pole_half_length},
                  {"gravity", c.gravity},
                  {"cart_friction", c.cart_friction},
                  {"pivot_friction", c.pivot_friction},
                  {"substeps", c.substeps}};
  } else {
    const auto& m = cfg.msd;
    j["plant"] = {{"mass", m.mass},
                  {"stiffness", m.stiffness},
                  {"damping", m.damping}};
  }
  json ang = json::array();
  for (char b : cfg.history.angular) ang.push_back(b != 0);
  j["history"] = {{"m_q", cfg.history.m_q},
                  {"m_u", cfg.history.m_u},
                  {"differences", cfg.history.differences},
                  {"angular", ang}};
  j["measure"] = {{"kind", measure_kind_name(cfg.measure)},
                  {"param", vec_to_json(cfg.measure_param)}};
  j["fictitious"] = {{"kind", fict_kind_name(cfg.fict)},
                     {"param", vec_to_json(cfg.fict_param)}};
  j["model"] = {{"fit_iters", cfg.gpfit.iters},
                {"fit_lr", cfg.gpfit.lr},
                {"noise_init_frac", cfg.gpfit.noise_init_frac}};
  j["policy"] = {{"n_basis", cfg.n_basis},
                 {"u_max", vec_to_json(cfg.u_max)},
                 {"center_lo", vec_to_json(cfg.center_lo)},
                 {"center_hi", vec_to_json(cfg.center_hi)},
                 {"opt_iters", cfg.opt.iters},
                 {"opt_lr", cfg.opt.lr}};
  j["rollout"] = {{"particles", cfg.particles},
                  {"chunks", cfg.chunks},
                  {"q0_mean", vec_to_json(cfg.q0_mean)},
                  {"q0_std", vec_to_json(cfg.q0_std)}};
  j["cost"] = cost_kind_name(cfg.cost);
  j["explore"] = {
      {"kind", cfg.explore.kind == ExploreConfig::Kind::filtered_noise
                   ? "filtered_noise"
                   : "cosines"},
      {"std", cfg.explore.std},
      {"cutoff_hz", cfg.explore.cutoff_hz},
      {"n_components", cfg.explore.n_components},
      {"freq_lo", cfg.explore.freq_lo},
      {"freq_hi", cfg.explore.freq_hi}};
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = json::parse(config_to_json_text(cfg));
  j.erase("seed");
  const std::string s = j.dump();  // nlohmann objects iterate sorted
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace vfrl
