#include "vfrl/policy.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "vfrl/rng.hpp"

namespace vfrl {

Vec Policy::eval(const Vec& x) const {
  require(x.size() == input_dim(), "policy eval: input dim mismatch");
  const int nb = n_basis();
  Vec k(nb);
  for (int i = 0; i < nb; ++i) {
    double s = 0.0;
    for (int d = 0; d < input_dim(); ++d) {
      double diff = x(d) - A(i, d);
      s += std::exp(-log_s2(d)) * (diff * diff);
    }
    k(i) = std::exp(-s);
  }
  Vec u(du());
  for (int d = 0; d < du(); ++d) {
    double pre = k.dot(w.col(d));
    u(d) = u_max(d) * std::tanh(pre * (1.0 / u_max(d)));
  }
  return u;
}

Policy init_policy(const PolicyInit& init, int input_dim, int du,
                   uint64_t seed) {
  require(init.n_basis >= 1, "policy init: n_basis >= 1");
  require(init.u_max.size() == du, "policy init: u_max per output dim");
  require(init.center_lo.size() == input_dim &&
              init.center_hi.size() == input_dim,
          "policy init: center range per input dim");
  Policy p;
  p.u_max = init.u_max;
  p.w.resize(init.n_basis, du);
  p.A.resize(init.n_basis, input_dim);
  // Initial lengthscale = the center half-range, so narrow input dims
  // (one-step increments) shape the surface as much as wide ones.
  p.log_s2.resize(input_dim);
  for (int j = 0; j < input_dim; ++j) {
    const double half = (init.center_hi(j) - init.center_lo(j)) / 2.0;
    p.log_s2(j) = 2.0 * std::log(std::max(half, 1e-3));
  }
  for (int i = 0; i < init.n_basis; ++i) {
    for (int j = 0; j < du; ++j)
      p.w(i, j) = rng::uniform(seed, rng::Stream::policy_init, 0, i, j, 0,
                               -init.u_max(j), init.u_max(j));
    for (int j = 0; j < input_dim; ++j)
      p.A(i, j) = rng::uniform(seed, rng::Stream::policy_init, 1, i, j, 0,
                               init.center_lo(j), init.center_hi(j));
  }
  return p;
}

PolicyVars policy_leaves(Tape& t, const Policy& p, bool requires_grad) {
  PolicyVars pv;
  pv.w = t.leaf(p.w, requires_grad);
  pv.A = t.leaf(p.A, requires_grad);
  pv.log_s2 = t.leaf(p.log_s2, requires_grad);
  return pv;
}

Tape::Var policy_eval_tape(Tape& t, const PolicyVars& pv, const Vec& u_max,
                           Tape::Var X) {
  Tape::Var wk = t.exp(t.scalar_mul(pv.log_s2, -1.0));
  Tape::Var k = t.exp(t.scalar_mul(t.wsqdist(X, pv.A, wk), -1.0));
  Tape::Var pre = t.matmul(k, pv.w);
  std::vector<Tape::Var> outs;
  for (int d = 0; d < u_max.size(); ++d) {
    Tape::Var col = t.slice_cols(pre, d, 1);
    Tape::Var sq = t.tanh(t.scalar_mul(col, 1.0 / u_max(d)));
    outs.push_back(t.scalar_mul(sq, u_max(d)));
  }
  return outs.size() == 1 ? outs[0] : t.concat_cols(outs);
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const nlohmann::json& j) {
  require(j.is_array() && !j.empty(), "policy json: expected matrix");
  const auto rows = j.size();
  const auto cols = j.at(0).size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    require(j.at(i).size() == cols, "policy json: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          j.at(i).at(c).get<double>();
  }
  return m;
}

Vec vec_from_json(const nlohmann::json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

}  // namespace

void save_policy(const std::string& path, const Policy& p,
                 const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "vfrl-policy-1";
  j["version"] = kToolVersion;
  j["config_hash"] = config_hash;
  j["n_basis"] = p.n_basis();
  j["input_dim"] = p.input_dim();
  j["du"] = p.du();
  j["u_max"] = std::vector<double>(p.u_max.data(),
                                   p.u_max.data() + p.u_max.size());
  j["w"] = mat_to_json(p.w);
  j["A"] = mat_to_json(p.A);
  j["log_s2"] = std::vector<double>(p.log_s2.data(),
                                    p.log_s2.data() + p.log_s2.size());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << j.dump(1) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path);
}

Policy load_policy(const std::string& path, std::string* config_hash_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  require(j.value("format", "") == "vfrl-policy-1",
          "policy json: unrecognized format field");
  Policy p;
  p.w = mat_from_json(j.at("w"));
  p.A = mat_from_json(j.at("A"));
  p.log_s2 = vec_from_json(j.at("log_s2"));
  p.u_max = vec_from_json(j.at("u_max"));
  require(p.n_basis() == j.at("n_basis").get<int>() &&
              p.input_dim() == j.at("input_dim").get<int>() &&
              p.du() == j.at("du").get<int>(),
          "policy json: dimension fields disagree with stored arrays");
  require(p.A.rows() == p.w.rows() && p.log_s2.size() == p.A.cols() &&
              p.u_max.size() == p.w.cols(),
          "policy json: inconsistent shapes");
  if (config_hash_out) *config_hash_out = j.at("config_hash").get<std::string>();
  return p;
}

}  // namespace vfrl
