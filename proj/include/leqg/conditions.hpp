#pragma once

#include <string>
#include <vector>

#include "leqg/model.hpp"
#include "leqg/solver.hpp"

namespace leqg::conditions {

using model::FrakturSet;
using model::ValidatedModel;

// Per-step saddle-point diagnostics. H is the (gamma, eta) Hessian block
//   [[B2, C'], [C, B3]];
// the step passes when B1 is positive definite and -H is positive definite.
struct SaddleEntry {
  int t = -1;
  double b1_min_eig = 0.0;
  bool b1_pass = false;
  bool negH_leading_minors_ok = false;
  bool negH_pass = false;
  double det_negH = 0.0;
  double det_H = 0.0;
  std::vector<std::string> violations;

  bool prop4_available = false;
  double N_lower = 0.0;
  double Lambda_inv_lower = 0.0;
  double Xi_inv_lower = 0.0;
  bool prop4_caveat = false;

  bool pass() const { return violations.empty(); }
};

struct SaddleReport {
  std::vector<SaddleEntry> entries;
  bool all_pass() const;
};

// Definiteness tests by symmetric eigen-factorization, with the scale-aware
// tolerance min-eig > 1e-10 * max(1, spectral radius). Failures are recorded
// as tagged violations, never thrown.
SaddleEntry check_assumption1(const FrakturSet& f);

struct SylvesterFlags {
  bool det_positive;  // det(-H) > 0; det(H) is recorded alongside
  bool b2_negdef;
  bool b3_negdef;
  double det_negH;
  double det_H;
};
// Sylvester-style conditions; the multivariate determinant test uses leading
// principal minors of -H in the printed (gamma, eta) block ordering.
SylvesterFlags sylvester_conditions(const FrakturSet& f);

struct Prop4Bounds {
  double N_lower;
  double Lambda_inv_lower;
  double Xi_inv_lower;
  bool caveat;  // set when Q, m or n are nonzero: bounds are then reported
                // for reference only (sufficient, not necessary)
};
// Scalar-case explicit sufficient bounds from the step-t data and the
// next-step P. Throws NotScalar on multivariate models and ThetaOutOfRange
// when theta <= 0.
Prop4Bounds prop4_bounds(const ValidatedModel& m, double P_next, int t);

// check_assumption1 at every step of a solved instance.
SaddleReport check_full_horizon(const solver::Solution& sol);

}  // namespace leqg::conditions
