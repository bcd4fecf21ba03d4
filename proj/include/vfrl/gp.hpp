#pragma once

#include <vector>

#include "vfrl/common.hpp"
#include "vfrl/dataset.hpp"
#include "vfrl/tape.hpp"

namespace vfrl {

// Position/control history windowing shared by the dynamics model, the
// policy, and the executed-episode controller. Histories are passed
// newest-first. In differences mode the model input is
//   [expand(q_t), q_t - q_{t-1}, ..., q_{t-m_q+1} - q_{t-m_q}, u_t..u_{t-m_u}]
// and in naive mode
//   [expand(q_t), expand(q_{t-1}), ..., expand(q_{t-m_q}), u_t..u_{t-m_u}],
// where expand() replaces each angular dim with its (sin, cos) pair.
// Difference entries stay raw. Policy inputs drop the control block.
struct HistoryConfig {
  int m_q = 2;
  int m_u = 1;
  bool differences = true;
  std::vector<char> angular;  // per position dim; empty means none
};

int expanded_dim(const HistoryConfig& h, int dq);
int gp_input_dim(const HistoryConfig& h, int dq, int du);
int policy_input_dim(const HistoryConfig& h, int dq);

Vec build_gp_input(const HistoryConfig& h, const std::vector<Vec>& qhist,
                   const std::vector<Vec>& uhist);
Vec build_policy_input(const HistoryConfig& h, const std::vector<Vec>& qhist);

// Batched forms over M particles; each history entry is an M x dq (or
// M x du) tape variable, newest first.
Tape::Var build_gp_input_tape(Tape& t, const HistoryConfig& h,
                              const std::vector<Tape::Var>& qhist,
                              const std::vector<Tape::Var>& uhist);
Tape::Var build_policy_input_tape(Tape& t, const HistoryConfig& h,
                                  const std::vector<Tape::Var>& qhist);

// Supervised pairs from executed episodes: inputs at step t (needing
// max(m_q, m_u) past steps), targets are next-step position increments
// q_{t+1} - q_t per dim. Faulted episodes are skipped.
struct TrainingData {
  Mat X;  // n x D
  Mat Y;  // n x dq
};
TrainingData build_training_pairs(const HistoryConfig& h,
                                  const std::vector<TrialLog>& logs, int dq,
                                  int du);

struct GPFitConfig {
  int iters = 1500;
  double lr = 0.01;
  double noise_init_frac = 0.01;  // initial noise var as fraction of var(y)
};

// Log marginal likelihood and its gradient with respect to
// theta = [log lam_1..D, log amp, log noise] on an already-standardized
// problem. Exposed so the fit's gradient path can be checked against
// finite differences. ok=false means the kernel matrix stayed
// unfactorizable through the whole jitter schedule.
struct LmlEval {
  double lml;
  Vec grad;
  double jitter;
  bool ok;
};
LmlEval gp_lml(const Mat& Xs, const Vec& ys, const Vec& theta);

// Squared-exponential kernel with per-dim lengthscales,
//   k(a, b) = amp * exp(-sum_d (a_d - b_d)^2 / lam_d),
// one independent GP per output dim, trained by Adam on the log marginal
// likelihood over log hyperparameters. Inputs and targets are
// standardized internally; because the kernel only sees differences,
// input standardization folds into effective weights at prediction time.
class GPModel {
 public:
  struct Hyper {
    Vec lam;       // D squared lengthscales (standardized input scale)
    double amp;    // signal variance (standardized target scale)
    double noise;  // observation noise variance (standardized)
    double jitter; // diagonal stabilizer actually used
    double lml;    // log marginal likelihood at these values
  };

  // Pieces the rollout assembles into tape ops. With
  // e = exp(-wsqdist(x, Xtr, w_eff)) (a 1 x n row for one query):
  //   mean = e . alpha_fold + mu_y
  //   var  = max(c0 - c1 * (e B e^T), var_floor)
  struct Predictor {
    Mat Xtr;         // n x D raw training inputs
    Vec w_eff;       // D effective inverse squared lengthscales
    Vec alpha_fold;  // n
    Mat B;           // n x n inverse of (K + noise + jitter)
    double c0 = 0, c1 = 0, mu_y = 0;
  };

  static constexpr double kVarFloor = 1e-12;

  void fit(const TrainingData& data, const GPFitConfig& cfg);

  int output_dims() const { return static_cast<int>(predictors_.size()); }
  int input_dim() const { return static_cast<int>(train_x_.cols()); }
  bool fitted() const { return !predictors_.empty(); }

  // Posterior at raw input rows for one output dim.
  void predict(int dim, const Mat& Xstar, Vec& mean, Vec& var) const;

  const Predictor& predictor(int dim) const { return predictors_.at(dim); }
  const Hyper& hyper(int dim) const { return hypers_.at(dim); }
  const Mat& train_inputs() const { return train_x_; }
  const Mat& train_targets() const { return train_y_; }
  const Vec& input_mean() const { return mu_x_; }
  const Vec& input_scale() const { return sd_x_; }
  double target_mean(int dim) const { return mu_y_(dim); }
  double target_scale(int dim) const { return sd_y_(dim); }

 private:
  std::vector<Predictor> predictors_;
  std::vector<Hyper> hypers_;
  Mat train_x_, train_y_;
  Vec mu_x_, sd_x_, mu_y_, sd_y_;
};

}  // namespace vfrl
