#pragma once

#include <cstdint>
#include <vector>

#include "leqg/detail/moments.hpp"
#include "leqg/model.hpp"
#include "leqg/solver.hpp"

namespace leqg::pg {

using model::ValidatedModel;

// The block policy K = (D, d, E, e, F, f):
//   ubar_t = D_t x + d_t,  gamma_t = E_t x + e_t,  eta_t = F_t x + f_t.
struct PolicyParams {
  std::vector<Mat> D, E, F;
  std::vector<Vec> d, e, f;

  static PolicyParams zeros(int T, int dx, int du);
  static PolicyParams from_gains(const std::vector<model::GainSet>& gains);
};

// Quadratic critic V^_t(x) = x'P x/2 + x'p + r, t = 0..T. The entry at T is
// clamped to the terminal quadratic and never updated.
struct CriticParams {
  std::vector<Mat> P;
  std::vector<Vec> p;
  std::vector<double> r;

  static CriticParams zeros(int T, int dx);
  // Zeros at t = 0..T-1, the stored terminal quadratic at t = T.
  static CriticParams initial(const ValidatedModel& m,
                              solver::TerminalConvention convention =
                                  solver::TerminalConvention::Theorem1);
};

// One sampled rollout under K: states, per-step theta-scaled pi-integrated
// running cost increments and entropy increments, terminal value in the stored
// convention, and the realized objective contribution C.
struct Rollout {
  std::vector<Vec> x;        // 0..T
  std::vector<double> run;   // theta * running increment, 0..T-1
  std::vector<double> ent;   // entropy increment, 0..T-1
  double terminal = 0.0;
  double C = 0.0;
};

Rollout sample_rollout(const ValidatedModel& m, const PolicyParams& K,
                       std::uint64_t seed, std::uint64_t substream,
                       solver::TerminalConvention convention =
                           solver::TerminalConvention::Theorem1);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// MC average of the objective over n_rollouts (substreams (seed, i)).
McEstimate objective_estimate(const ValidatedModel& m, const PolicyParams& K,
                              std::size_t n_rollouts, std::uint64_t seed,
                              solver::TerminalConvention convention =
                                  solver::TerminalConvention::Theorem1);

// Exact objective by closed-loop Gaussian moment propagation; rho2 > 0 adds
// an exploring-start covariance rho2*I to the initial state's second moment.
double exact_objective(const ValidatedModel& m, const PolicyParams& K,
                       double rho2 = 0.0,
                       solver::TerminalConvention convention =
                           solver::TerminalConvention::Theorem1);

struct PolicyGrad {
  std::vector<Mat> D, E, F;
  std::vector<Vec> d, e, f;

  double inf_norm() const;
};

// Analytic gradient of exact_objective in all six blocks, by one backward
// adjoint pass over the moment recursion. Also returns the per-t augmented
// second moments Sigma~_t = [[X_t, mu_t], [mu_t', 1]] for preconditioning.
PolicyGrad exact_objective_grad(const ValidatedModel& m,
                                const PolicyParams& K, double rho2,
                                std::vector<Mat>* sigma_aug = nullptr,
                                solver::TerminalConvention convention =
                                    solver::TerminalConvention::Theorem1);

// Natural-gradient update: each row block [grad_X grad_x] is post-multiplied
// by the inverse augmented state second moment, descending in (D, d) and
// ascending in (E, e, F, f). Rank-deficient moments are regularized with
// 1e-8 I; `regularized` reports whether that happened.
PolicyParams npg_step(const PolicyParams& K, const PolicyGrad& grad,
                      const std::vector<Mat>& sigma_aug, double delta,
                      bool* regularized = nullptr);

// One least-mean-squares sweep toward the one-step targets
//   y_t = run_t - ent_t + V^_{t+1}(x_{t+1})
// along each rollout, processed backward in t. The step is normalized by the
// squared feature norm (NLMS).
CriticParams critic_td_update(const CriticParams& critic,
                              const std::vector<Rollout>& batch,
                              double learn_rate);

double critic_value(const CriticParams& critic, int t, const Vec& x);

struct TrainConfig {
  int episodes = 2000;
  int rollouts = 8;         // per-episode critic batch (and MC probes)
  double delta0 = 1e-2;     // step schedule delta0 / (1 + m/100)
  std::uint64_t seed = 0;
  double rho2 = 1.0;        // exploring-start covariance for the actor
  bool model_free = false;  // two-point zeroth-order gradients instead of
                            // the analytic moment gradient
  solver::TerminalConvention convention = solver::TerminalConvention::Theorem1;
};

struct HistoryEntry {
  int episode = 0;
  double C_estimate = 0.0;
  double gain_gap = 0.0;  // max deviation of (D, d, E, e) from closed form
  double eta_norm = 0.0;  // max magnitude over (F, f)
};

struct TrainResult {
  PolicyParams K;
  CriticParams critic;
  std::vector<HistoryEntry> history;
};

// Alternating actor (npg_step) and critic (critic_td_update) loop. Throws
// Diverged when the objective magnitude exceeds ten times its initial scale.
TrainResult train(const ValidatedModel& m, const TrainConfig& config);

}  // namespace leqg::pg
