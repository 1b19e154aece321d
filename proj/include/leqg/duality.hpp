#pragma once

#include <cstdint>
#include <vector>

#include "leqg/model.hpp"
#include "leqg/solver.hpp"

namespace leqg::duality {

using model::GainSet;
using model::ValidatedModel;

// Deterministic mean-shift schedules (gamma_t on the system noise, eta_t on
// the exploration noise), t = 0..T-1.
struct MeasureShift {
  std::vector<Vec> gamma;
  std::vector<Vec> eta;

  static MeasureShift zeros(int T, int dx, int du);
};

// One sampled noise path.
struct NoiseRealization {
  std::vector<Vec> w;
  std::vector<Vec> v;
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

// D_KL(P^{gamma,eta} || P) = sum_t (gamma'Lambda^{-1}gamma +
// eta'Xi^{-1}eta)/2.
double relative_entropy(const MeasureShift& shift, const ValidatedModel& m);

// ln dP^{gamma,eta}/dP evaluated on one path sampled under P^{gamma,eta}:
// sum_t [gamma'Lambda^{-1}w - gamma'Lambda^{-1}gamma/2
//        + eta'Xi^{-1}v - eta'Xi^{-1}eta/2].
double log_rn_derivative(const MeasureShift& shift,
                         const NoiseRealization& noise,
                         const ValidatedModel& m);

// The pi-integrated path cost along stored states x_0..x_T and deterministic
// controls ubar_0..ubar_{T-1}:
//   sum_t [x'Mx + tr(Xi_t N_t) + (ubar+eta)'N(ubar+eta) + (ubar+eta)'Qx
//          + x'm + (ubar+eta)'n]  +  x_T'M_T x_T + x_T'm_T.
// An empty eta schedule means eta = 0.
double cost_G(const std::vector<Vec>& states, const std::vector<Vec>& ubars,
              const std::vector<Vec>& eta, const ValidatedModel& m);

// Monte Carlo estimate of ln E_P[exp(theta G_T)] under the reference measure
// with feedback controls ubar = Du x + du, exploration v ~ N(0, Xi_t) applied
// through the dynamics, and cost_G with eta = 0. Log-mean-exp with max-shift;
// delta-method standard error. Sample i draws from substream (seed, i), so
// the result is independent of the worker count.
McResult free_energy_mc(const ValidatedModel& m,
                        const std::vector<GainSet>& gains,
                        std::size_t samples, std::uint64_t seed);

// Exact value of the dual game under affine feedback policies plus an
// additive deterministic probe on the adversary:
//   u = Du x + du,  gamma = Dg x + dg + shift.gamma_t,
//   eta = Deta x + deta + shift.eta_t,
// computed by forward propagation of the closed-loop Gaussian moments. The
// terminal quadratic follows the solver convention (default: the stored
// x'M_T x/2 + x'm_T form, under which the optimum equals V_0(x0)).
double game_objective(
    const ValidatedModel& m, const std::vector<GainSet>& gains,
    const MeasureShift& shift,
    solver::TerminalConvention convention = solver::TerminalConvention::Theorem1);

}  // namespace leqg::duality
