#pragma once

#include <vector>

#include "leqg/model.hpp"

namespace leqg::detail {

// Affine three-player policy over the horizon:
//   u_t = D_t x + d_t,  gamma_t = E_t x + e_t,  eta_t = F_t x + f_t.
struct AffinePolicy {
  std::vector<Mat> D, E, F;  // d_u x d_x, d_x x d_x, d_u x d_x
  std::vector<Vec> d, e, f;  // d_u, d_x, d_u

  static AffinePolicy zeros(int T, int dx, int du);
};

// Exact closed-loop Gaussian moment propagation of the penalized game
// objective
//   sum_t ( theta * E[running cost with control mean (D+F)x + d+f]
//           - E[entropy increments of (E,e) and (F,f)] )
//   + E[x_T' PT x_T / 2 + x_T' pT],
// with mu_0 = x0 and second moment X_0 = x0 x0' + rho2 I (rho2 = 0 for a
// deterministic start). Also returns the per-step moments and closed-loop
// coefficients for reuse by gradients.
struct MomentRun {
  double value = 0.0;
  std::vector<Vec> mu;    // 0..T
  std::vector<Mat> X;     // 0..T, second moments E[x x']
  std::vector<Mat> Abar;  // 0..T-1
  std::vector<Vec> abar;  // 0..T-1
};

MomentRun propagate_policy_value(const model::ValidatedModel& m,
                                 const AffinePolicy& K, const Mat& PT,
                                 const Vec& pT, double rho2);

}  // namespace leqg::detail
