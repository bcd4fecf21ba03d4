#pragma once

#include <string>

#include "vfrl/common.hpp"
#include "vfrl/tape.hpp"

namespace vfrl {

// Squashed radial-basis controller:
//   u_d = u_max_d * tanh( (1/u_max_d) * sum_i w_{i,d} *
//                          exp(-sum_k (a_{i,k} - x_k)^2 / s2_k) )
// with trainable weights w, centers A, and a shared diagonal squared
// lengthscale s2 stored in log form. Outputs satisfy |u_d| < u_max_d by
// construction.
struct Policy {
  Mat w;       // n_b x du
  Mat A;       // n_b x D
  Vec log_s2;  // D
  Vec u_max;   // du

  int n_basis() const { return static_cast<int>(w.rows()); }
  int input_dim() const { return static_cast<int>(A.cols()); }
  int du() const { return static_cast<int>(w.cols()); }

  Vec eval(const Vec& x) const;
};

struct PolicyInit {
  int n_basis = 200;
  Vec u_max;      // du
  Vec center_lo;  // D, per-input-dim center range
  Vec center_hi;  // D
};

// w ~ U(-u_max_d, u_max_d), centers uniform in the per-dim ranges,
// lengthscales the center half-range per dim. Draws come from the
// policy_init stream so the result depends only on (seed, shapes).
Policy init_policy(const PolicyInit& init, int input_dim, int du,
                   uint64_t seed);

// Trainable leaves plus the batched evaluation used inside rollouts.
struct PolicyVars {
  Tape::Var w, A, log_s2;
};
PolicyVars policy_leaves(Tape& t, const Policy& p, bool requires_grad);
Tape::Var policy_eval_tape(Tape& t, const PolicyVars& pv, const Vec& u_max,
                           Tape::Var X);

// JSON checkpoint, round-trip exact. config_hash ties a saved policy to
// the experiment configuration that produced it.
void save_policy(const std::string& path, const Policy& p,
                 const std::string& config_hash);
Policy load_policy(const std::string& path, std::string* config_hash_out);

}  // namespace vfrl
