#pragma once

#include <tuple>
#include <vector>

#include "leqg/model.hpp"

namespace leqg::solver {

using model::FrakturSet;
using model::GainSet;
using model::ValidatedModel;
using model::ValueQuad;

// Terminal coefficients of the backward recursion. Theorem1 stores the
// terminal value as x'M_T x/2 + x'm_T (the convention the reference table
// uses at theta=1); DppScaled stores the theta-scaled quadratic directly,
// P_T = 2 theta M_T, p_T = theta m_T.
enum class TerminalConvention { Theorem1, DppScaled };

struct Solution {
  std::vector<ValueQuad> value;     // t = 0..T
  std::vector<GainSet> gains;       // t = 0..T-1
  std::vector<FrakturSet> fraktur;  // t = 0..T-1; fraktur[t] built from value[t+1]
  ValidatedModel model;
  TerminalConvention convention = TerminalConvention::Theorem1;
  bool saddle_verified = false;
};

// The nine shorthand coefficients at t+1 from the value quad at t+1 and step-t
// model data. G is assembled by solving B1 Y = C, G = C'Y - B2.
FrakturSet fraktur_coeffs(const ValueQuad& vnext, int t, const ValidatedModel& m);

// One backward step t+1 -> t. P_t is symmetrized after assembly.
std::tuple<ValueQuad, FrakturSet, GainSet> backward_step(const ValueQuad& vnext,
                                                         int t,
                                                         const ValidatedModel& m);

// Full backward sweep. Completes even when the saddle conditions fail at some
// step; the result is then stamped saddle_verified = false.
Solution solve(const ValidatedModel& m,
               TerminalConvention convention = TerminalConvention::Theorem1);

// Stationary point of the step objective: eta* = 0 and (u*, gamma*) from the
// coupled linear system
//   B1 u + C  gamma = -(A1 x + a1)
//   C' u + B2 gamma = -(A2 x + a2).
std::tuple<Vec, Vec, Vec> stationary_controls(const FrakturSet& f, const Vec& x);

// Affine gains from the same linear system solved at the basis states and at
// x = 0; (Deta, deta) are identically zero.
GainSet gains_from_fraktur(const FrakturSet& f);

// x'P_t x / 2 + x'p_t + r_t.
double value_at(const Solution& sol, int t, const Vec& x);

struct CriterionTransforms {
  double inf_I;      // exp(V_0(x0)); +inf when the exponent overflows
  double sup_J;      // -V_0(x0) / theta
  double log_inf_I;  // V_0(x0), always finite and reported alongside
  bool overflow;
};
CriterionTransforms criterion_transforms(const Solution& sol);

// Closed-form conditional expectation of the next value quad under mean
// shifts (gamma, eta):
//   mu = a + A x + B(u + eta) + gamma,
//   E[V_next] = mu'P mu/2 + p'mu + r + tr(B'Xi B P)/2 + tr(Lambda P)/2.
double lemma1_expectation(const ValueQuad& vnext, const Vec& x, const Vec& u,
                          const Vec& gamma, const Vec& eta, int t,
                          const ValidatedModel& m);
// Overload with explicit noise matrices, for harnesses that probe the trace
// terms (for example with zero matrices).
double lemma1_expectation(const ValueQuad& vnext, const Vec& x, const Vec& u,
                          const Vec& gamma, const Vec& eta, const Vec& a,
                          const Mat& A, const Mat& B, const Mat& Lambda_t,
                          const Mat& Xi_t);

// Straight transcription of the printed closed forms for (u*, gamma*) in the
// scalar case. Retained purely as a cross-check of the linear-solve route;
// throws NotScalar on multivariate input.
std::pair<double, double> closed_form_controls_scalar(const FrakturSet& f,
                                                      double x);

}  // namespace leqg::solver
