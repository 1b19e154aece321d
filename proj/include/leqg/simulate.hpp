#pragma once

#include <cstdint>
#include <vector>

#include "leqg/io.hpp"
#include "leqg/model.hpp"
#include "leqg/solver.hpp"

namespace leqg::simulate {

using model::ValidatedModel;

enum class Measure { Reference, Shifted };

struct StepRecord {
  Vec x;          // state entering step t
  Vec u_star;     // Du x + du
  Vec gamma_star; // Dg x + dg, evaluated at the realized state
  Vec eta_star;   // identically zero up to round-off
  Vec w;          // realized system noise
  Vec v;          // realized exploration noise
  double running_cost = 0.0;  // pi-integrated increment at (x, u_star)
};

struct Trajectory {
  std::vector<StepRecord> steps;  // t = 0..T-1
  Vec x_T;
  double terminal_cost = 0.0;
  double total_G = 0.0;  // sum of running increments plus terminal
  Measure measure = Measure::Reference;
  std::uint64_t seed = 0;
};

// One seeded run. Under Reference, w ~ N(0, Lambda_t) and v ~ N(0, Xi_t);
// under Shifted, w ~ N(gamma*(x), Lambda_t) and v ~ N(eta*(x), Xi_t) with the
// gains evaluated at the realized state. Uses substream (seed, 0).
Trajectory run_trajectory(const ValidatedModel& m, const solver::Solution& sol,
                          Measure measure, std::uint64_t seed);

struct BatchSummary {
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  Measure measure = Measure::Reference;
  std::vector<Vec> mean_x;   // t = 0..T
  std::vector<Vec> var_x;    // componentwise
  std::vector<Vec> mean_u;   // t = 0..T-1
  std::vector<Vec> var_u;
  std::vector<Vec> mean_w;   // realized noise means, t = 0..T-1
  double mean_theta_G = 0.0;
  double log_mean_exp_theta_G = 0.0;  // max-shifted, as in free_energy_mc
};

// n_runs independent trajectories on substreams (seed, 0..n_runs-1).
BatchSummary run_batch(const ValidatedModel& m, const solver::Solution& sol,
                       Measure measure, std::size_t n_runs,
                       std::uint64_t seed);

struct Transition {
  Vec x;
  Vec u_applied;  // ubar + v actually entering the dynamics
  Vec x_next;
};

struct EstimateRecord {
  Mat A_hat;
  Mat B_hat;
  Mat resid_cov;   // d_x x d_x
  Mat se_A;        // entrywise standard errors
  Mat se_B;
  std::size_t samples = 0;
};

// Least-squares fit of x_next - a on [x; u_applied]. The drift a is taken
// from the prior model (known, per the procedure). Throws RankDeficient when
// the regressor matrix has fewer rows than columns or is numerically
// rank-deficient.
EstimateRecord estimate_ab(const std::vector<Transition>& transitions,
                           const ValidatedModel& prior);

struct EpisodeEntry {
  int episode = 0;
  Mat A_used;
  Mat B_used;
  bool saddle_pass = false;
  bool prop4_available = false;
  bool prop4_pass = false;
  std::size_t runs = 0;
  double mean_theta_G = 0.0;
  EstimateRecord estimate;  // refit on all transitions collected so far
};

struct ProcedureLog {
  solver::Solution initial_solution;  // backward pass from the initial (A, B)
  std::vector<EpisodeEntry> episodes;
  Mat A_final;
  Mat B_final;
};

// The estimation loop: per episode, solve backward with the current (A, B)
// estimate, verify the saddle conditions (and the scalar explicit bounds when
// applicable), run the true system forward under the reference measure with
// the estimated gains and fresh exploration noise, then re-fit (A, B) on all
// transitions so far. Episode e, run i draws from substream
// (seed, e * 10000 + i). Throws ConditionsUnsatisfiable when the explicit
// bounds show no positive-definite exploration covariance can work
// (Lambda^{-1} bounded above by P_{t+1}).
ProcedureLog procedure_recursion(const Mat& A0, const Mat& B0,
                                 const ValidatedModel& truth, int n_episodes,
                                 int transitions_per_episode,
                                 std::uint64_t seed);

// The reference-table layout: rows t = 0..T with columns
//   t, x_P, x_Pstar, P, p, r, V, u_star, gamma_star, eta_star,
//   B1, B2, B3, C, det_negH.
// x_P comes from a Reference run (substream 0) and x_Pstar from a Shifted run
// (substream 1). V and the controls are evaluated at x_Pstar; the Fraktur
// columns at row t are built from P_t, so row 0 leaves them blank, and row T
// has no control columns. Cells are fixed to 4 decimals.
io::Table trajectory_table(const ValidatedModel& m,
                           const solver::Solution& sol, std::uint64_t seed);

}  // namespace leqg::simulate
