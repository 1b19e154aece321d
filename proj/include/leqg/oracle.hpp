#pragma once

#include <vector>

#include "leqg/model.hpp"
#include "leqg/solver.hpp"

namespace leqg::oracle {

using model::FrakturSet;
using model::ValidatedModel;

// The step objective as printed:
//   F(u,g,e) = u'B1 u/2 + u'(A1 x + a1) + g'B2 g/2 + g'(A2 x + a2)
//            + e'B3 e/2 + e'(A1 x + a1) + u'C g + u'B1 e + e'C g.
double eval_F(const FrakturSet& f, const Vec& x, const Vec& u, const Vec& g,
              const Vec& e);

// Numeric saddle by alternating exact best responses (each inner problem an
// unconstrained quadratic solve). Stops when the sweep moves everything less
// than 1e-10; throws NoConvergence after 1e4 sweeps.
std::tuple<Vec, Vec, Vec> numeric_saddle_F(const FrakturSet& f, const Vec& x);

// ln E_P[exp(theta G_T)] by tensor-product Gauss-Hermite quadrature over all
// 2T noise dimensions of a scalar instance with T <= 3, under feedback
// controls ubar = Du x + du. nodes_per_dim >= 2; the grid has
// nodes_per_dim^(2T) points, so T=3 needs a reduced node count.
double quadrature_log_moment(const ValidatedModel& m,
                             const std::vector<model::GainSet>& gains,
                             int nodes_per_dim = 64);

// Probabilists' Gauss-Hermite rule (weight function the standard normal
// density; weights sum to 1), by eigen-decomposition of the Jacobi matrix.
void gauss_hermite(int n, std::vector<double>& nodes,
                   std::vector<double>& weights);

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int n = 41;

  std::vector<double> points() const;
};

struct GridValue {
  std::vector<double> xs;
  std::vector<double> values;  // V_0 at the state nodes
  double P0_fit = 0.0;         // quadratic refit V(x) ~ P x^2/2 + p x + r
  double p0_fit = 0.0;
  double r0_fit = 0.0;

  double v_at(double x) const;  // linear interpolation
};

// Grid dynamic program on a scalar instance with T <= 3: at each state node,
// inf over the u grid of sup over the (gamma, eta) grids of the step
// objective, with the exact Lemma-1 continuation of the quadratic fitted to
// the next-step grid values. Control boxes auto-expand (doubling, up to six
// times) when an arg-optimum lands on the box edge, then three sliding
// refinement passes shrink around the incumbent; GridTooCoarse is raised only
// when expansion maxes out.
GridValue dp_grid_value(const ValidatedModel& m, const GridSpec& state_grid,
                        const GridSpec& control_grid,
                        solver::TerminalConvention convention =
                            solver::TerminalConvention::Theorem1);

}  // namespace leqg::oracle
