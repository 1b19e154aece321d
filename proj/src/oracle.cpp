#include "leqg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "leqg/errors.hpp"

namespace leqg::oracle {

double eval_F(const FrakturSet& f, const Vec& x, const Vec& u, const Vec& g,
              const Vec& e) {
  const Vec s1 = f.A1 * x + f.a1;
  const Vec s2 = f.A2 * x + f.a2;
  double val = 0.0;
  val += 0.5 * u.dot(f.B1 * u) + u.dot(s1);
  val += 0.5 * g.dot(f.B2 * g) + g.dot(s2);
  val += 0.5 * e.dot(f.B3 * e) + e.dot(s1);
  val += u.dot(f.C * g) + u.dot(f.B1 * e) + e.dot(f.C * g);
  return val;
}

std::tuple<Vec, Vec, Vec> numeric_saddle_F(const FrakturSet& f, const Vec& x) {
  const Vec s1 = f.A1 * x + f.a1;
  const Vec s2 = f.A2 * x + f.a2;
  Eigen::PartialPivLU<Mat> luB1(f.B1), luB2(f.B2), luB3(f.B3);

  Vec u = Vec::Zero(f.B1.rows());
  Vec g = Vec::Zero(f.B2.rows());
  Vec e = Vec::Zero(f.B3.rows());
  const int max_sweeps = 10000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Vec u_new = -luB1.solve(s1 + f.C * g + f.B1 * e);
    const Vec g_new = -luB2.solve(s2 + f.C.transpose() * (u_new + e));
    const Vec e_new = -luB3.solve(s1 + f.B1 * u_new + f.C * g_new);
    const double move =
        std::max({(u_new - u).lpNorm<Eigen::Infinity>(),
                  (g_new - g).lpNorm<Eigen::Infinity>(),
                  (e_new - e).lpNorm<Eigen::Infinity>()});
    u = u_new;
    g = g_new;
    e = e_new;
    if (move < 1e-10) return {u, g, e};
  }
  throw NumericalError("NoConvergence",
                       "best-response alternation did not contract within "
                       "10000 sweeps (saddle conditions likely violated)");
}

void gauss_hermite(int n, std::vector<double>& nodes,
                   std::vector<double>& weights) {
  Mat J = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(double(i));
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;
  }
}

double quadrature_log_moment(const ValidatedModel& m,
                             const std::vector<model::GainSet>& gains,
                             int nodes_per_dim) {
  if (!m.scalar())
    throw NumericalError("NotScalar",
                         "quadrature_log_moment handles d_x = d_u = 1 only");
  const auto& s = m.spec();
  const int T = s.T;
  if (T > 3)
    throw ConfigError("DimensionMismatch",
                      "quadrature_log_moment handles T <= 3, got T = " +
                          std::to_string(T));
  if (int(gains.size()) != T)
    throw ConfigError("DimensionMismatch", "gain schedule length mismatch");
  if (nodes_per_dim < 2)
    throw ConfigError("DimensionMismatch", "need at least 2 nodes per dim");

  std::vector<double> nodes, weights;
  gauss_hermite(nodes_per_dim, nodes, weights);

  std::vector<double> sig_w(T), sig_v(T), Du(T), du_(T), Nt(T), trXiN(T);
  for (int t = 0; t < T; ++t) {
    sig_w[t] = std::sqrt(s.Lambda[t](0, 0));
    sig_v[t] = std::sqrt(s.Xi[t](0, 0));
    Du[t] = gains[t].Du(0, 0);
    du_[t] = gains[t].du(0);
    Nt[t] = s.N[t](0, 0);
    trXiN[t] = s.Xi[t](0, 0) * s.N[t](0, 0);
  }
  const double a = s.a(0), A = s.A(0, 0), B = s.B(0, 0);
  const double M = s.M(0, 0), Q = s.Q(0, 0), mlin = s.m(0), nlin = s.n(0);
  const double MT = s.M_T(0, 0), mT = s.m_T(0);
  const double x0 = s.x0(0), theta = s.theta;

  const int dims = 2 * T;
  std::vector<int> digit(dims, 0);

  auto path_psi = [&]() {
    double x = x0;
    double G = 0.0;
    for (int t = 0; t < T; ++t) {
      const double ubar = Du[t] * x + du_[t];
      const double v = sig_v[t] * nodes[digit[2 * t]];
      const double w = sig_w[t] * nodes[digit[2 * t + 1]];
      G += M * x * x + trXiN[t] + Nt[t] * ubar * ubar + Q * ubar * x +
           mlin * x + nlin * ubar;
      x = a + A * x + B * (ubar + v) + w;
    }
    G += MT * x * x + mT * x;
    return theta * G;
  };
  auto advance = [&]() {
    for (int i = 0; i < dims; ++i) {
      if (++digit[i] < nodes_per_dim) return true;
      digit[i] = 0;
    }
    return false;
  };

  // Pass 1: the max exponent for stabilization.
  double shift = -std::numeric_limits<double>::infinity();
  do {
    shift = std::max(shift, path_psi());
  } while (advance());

  // Pass 2: Kahan-compensated weighted sums.
  double sum = 0.0, comp = 0.0, wsum = 0.0, wcomp = 0.0;
  std::fill(digit.begin(), digit.end(), 0);
  do {
    double wt = 1.0;
    for (int i = 0; i < dims; ++i) wt *= weights[digit[i]];
    const double term = wt * std::exp(path_psi() - shift);
    double y = term - comp;
    double t2 = sum + y;
    comp = (t2 - sum) - y;
    sum = t2;
    y = wt - wcomp;
    t2 = wsum + y;
    wcomp = (t2 - wsum) - y;
    wsum = t2;
  } while (advance());

  return shift + std::log(sum / wsum);
}

std::vector<double> GridSpec::points() const {
  std::vector<double> xs(n);
  if (n == 1) {
    xs[0] = 0.5 * (lo + hi);
    return xs;
  }
  const double h = (hi - lo) / double(n - 1);
  for (int i = 0; i < n; ++i) xs[i] = lo + h * i;
  return xs;
}

double GridValue::v_at(double x) const {
  if (xs.empty()) return 0.0;
  if (x <= xs.front()) return values.front();
  if (x >= xs.back()) return values.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = std::size_t(it - xs.begin());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return (1.0 - t) * values[j - 1] + t * values[j];
}

namespace {

struct Box {
  double center;
  double half;
  int n;

  double node(int i) const {
    if (n == 1) return center;
    return center - half + 2.0 * half * double(i) / double(n - 1);
  }
};

// Visit indices center-outward so that flat directions settle on the box
// center instead of an edge.
std::vector<int> center_out(int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double mid = 0.5 * (n - 1);
  std::stable_sort(order.begin(), order.end(), [mid](int a, int b) {
    return std::abs(a - mid) < std::abs(b - mid);
  });
  return order;
}

struct StepEval {
  // Scalar fast path of
  //   theta*running(x, u+eta) - entropy(g, eta) + E[V_next].
  double a, A, B, M, N, Q, mlin, nlin, trXiN;
  double lam_inv, xi_inv;
  double P, p, r, tr_noise;
  double theta, x;

  double operator()(double u, double g, double e) const {
    const double ue = u + e;
    const double mu = a + A * x + B * ue + g;
    double val = theta * (M * x * x + trXiN + N * ue * ue + Q * ue * x +
                          mlin * x + nlin * ue);
    val -= 0.5 * (lam_inv * g * g + xi_inv * e * e);
    val += 0.5 * P * mu * mu + p * mu + r + tr_noise;
    return val;
  }
};

struct GridSaddle {
  double value;
  double u, g, e;
  bool u_edge, g_edge, e_edge;
};

GridSaddle scan(const StepEval& f, const Box& bu, const Box& bg,
                const Box& be, const std::vector<int>& order) {
  GridSaddle best{};
  double best_outer = std::numeric_limits<double>::infinity();
  for (int iu : order) {
    const double u = bu.node(iu);
    double inner = -std::numeric_limits<double>::infinity();
    double gi = bg.center, ei = be.center;
    int gidx = 0, eidx = 0;
    for (int ig : order) {
      const double g = bg.node(ig);
      for (int ie : order) {
        const double e = be.node(ie);
        const double v = f(u, g, e);
        if (v > inner) {
          inner = v;
          gi = g;
          ei = e;
          gidx = ig;
          eidx = ie;
        }
      }
    }
    if (inner < best_outer) {
      best_outer = inner;
      best.value = inner;
      best.u = u;
      best.g = gi;
      best.e = ei;
      best.u_edge = (iu == 0 || iu == bu.n - 1) && bu.n > 1;
      best.g_edge = (gidx == 0 || gidx == bg.n - 1) && bg.n > 1;
      best.e_edge = (eidx == 0 || eidx == be.n - 1) && be.n > 1;
    }
  }
  return best;
}

double saddle_on_grid(const StepEval& f, const GridSpec& control_grid) {
  const double c0 = 0.5 * (control_grid.lo + control_grid.hi);
  const double h0 = 0.5 * (control_grid.hi - control_grid.lo);
  Box bu{c0, h0, control_grid.n};
  Box bg{c0, h0, control_grid.n};
  Box be{c0, h0, control_grid.n};
  const auto order = center_out(control_grid.n);

  GridSaddle s{};
  bool interior = false;
  for (int expansion = 0; expansion <= 6; ++expansion) {
    s = scan(f, bu, bg, be, order);
    if (!s.u_edge && !s.g_edge && !s.e_edge) {
      interior = true;
      break;
    }
    if (s.u_edge) bu = Box{s.u, 2.0 * bu.half, bu.n};
    if (s.g_edge) bg = Box{s.g, 2.0 * bg.half, bg.n};
    if (s.e_edge) be = Box{s.e, 2.0 * be.half, be.n};
  }
  if (!interior)
    throw NumericalError("GridTooCoarse",
                         "control arg-optimum stayed on the box edge after "
                         "six box doublings");

  for (int pass = 0; pass < 3; ++pass) {
    auto spacing = [](const Box& b) {
      return b.n > 1 ? 2.0 * b.half / double(b.n - 1) : b.half;
    };
    bu = Box{s.u, 2.0 * spacing(bu), bu.n};
    bg = Box{s.g, 2.0 * spacing(bg), bg.n};
    be = Box{s.e, 2.0 * spacing(be), be.n};
    s = scan(f, bu, bg, be, order);
  }
  return s.value;
}

void fit_quadratic(const std::vector<double>& xs,
                   const std::vector<double>& vs, double& P, double& p,
                   double& r) {
  const int n = int(xs.size());
  Mat Z(n, 3);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    Z(i, 0) = 0.5 * xs[i] * xs[i];
    Z(i, 1) = xs[i];
    Z(i, 2) = 1.0;
    y(i) = vs[i];
  }
  const Vec c = Z.colPivHouseholderQr().solve(y);
  P = c(0);
  p = c(1);
  r = c(2);
}

}  // namespace

GridValue dp_grid_value(const ValidatedModel& m, const GridSpec& state_grid,
                        const GridSpec& control_grid,
                        solver::TerminalConvention convention) {
  if (!m.scalar())
    throw NumericalError("NotScalar",
                         "dp_grid_value handles d_x = d_u = 1 only");
  const auto& s = m.spec();
  if (s.T > 3)
    throw ConfigError("DimensionMismatch",
                      "dp_grid_value handles T <= 3, got T = " +
                          std::to_string(s.T));

  double P, p, r;
  if (convention == solver::TerminalConvention::Theorem1) {
    P = s.M_T(0, 0);
    p = s.m_T(0);
  } else {
    P = 2.0 * s.theta * s.M_T(0, 0);
    p = s.theta * s.m_T(0);
  }
  r = 0.0;

  const std::vector<double> xs = state_grid.points();
  std::vector<double> values(xs.size());

  for (int t = s.T - 1; t >= 0; --t) {
    StepEval f{};
    f.a = s.a(0);
    f.A = s.A(0, 0);
    f.B = s.B(0, 0);
    f.M = s.M(0, 0);
    f.N = s.N[t](0, 0);
    f.Q = s.Q(0, 0);
    f.mlin = s.m(0);
    f.nlin = s.n(0);
    f.trXiN = s.Xi[t](0, 0) * s.N[t](0, 0);
    f.lam_inv = m.Lambda_inv(t)(0, 0);
    f.xi_inv = m.Xi_inv(t)(0, 0);
    f.P = P;
    f.p = p;
    f.r = r;
    f.tr_noise = 0.5 * (f.B * f.B * s.Xi[t](0, 0) + s.Lambda[t](0, 0)) * P;
    f.theta = s.theta;

    for (std::size_t i = 0; i < xs.size(); ++i) {
      f.x = xs[i];
      values[i] = saddle_on_grid(f, control_grid);
    }
    fit_quadratic(xs, values, P, p, r);
  }

  GridValue out;
  out.xs = xs;
  out.values = values;
  out.P0_fit = P;
  out.p0_fit = p;
  out.r0_fit = r;
  return out;
}

}  // namespace leqg::oracle
