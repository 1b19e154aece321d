#include "leqg/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "leqg/conditions.hpp"
#include "leqg/errors.hpp"

namespace leqg::solver {
namespace {

constexpr double kRcondFloor = 1e-12;

Mat symmetrize(const Mat& X) { return 0.5 * (X + X.transpose()); }

void require_rcond(const Eigen::PartialPivLU<Mat>& lu, const char* code,
                   const char* what) {
  if (!(lu.rcond() > kRcondFloor)) {
    std::ostringstream os;
    os << what << " numerically singular (reciprocal condition estimate "
       << lu.rcond() << ")";
    throw NumericalError(code, os.str());
  }
}

}  // namespace

FrakturSet fraktur_coeffs(const ValueQuad& vnext, int t,
                          const ValidatedModel& m) {
  const Mat& P = vnext.P;
  const Vec& p = vnext.p;
  const Mat& A = m.spec().A;
  const Mat& B = m.spec().B;
  const Vec& a = m.spec().a;
  const double theta = m.theta();

  FrakturSet f;
  f.A1 = B.transpose() * P * A + theta * m.spec().Q;
  f.a1 = B.transpose() * P * a + B.transpose() * p + theta * m.spec().n;
  f.A2 = P.transpose() * A;
  f.a2 = P.transpose() * a + p;
  f.B1 = B.transpose() * P * B + 2.0 * theta * m.N(t);
  f.B2 = -m.Lambda_inv(t) + P;
  f.B3 = -m.Xi_inv(t) + f.B1;
  f.C = B.transpose() * P;

  Eigen::PartialPivLU<Mat> luB1(f.B1);
  require_rcond(luB1, "SingularB1", "B1 block");
  f.G = f.C.transpose() * luB1.solve(f.C) - f.B2;
  return f;
}

std::tuple<ValueQuad, FrakturSet, GainSet> backward_step(
    const ValueQuad& vnext, int t, const ValidatedModel& m) {
  FrakturSet f = fraktur_coeffs(vnext, t, m);

  Eigen::PartialPivLU<Mat> luB1(f.B1);
  require_rcond(luB1, "SingularB1", "B1 block");
  Eigen::PartialPivLU<Mat> luG(f.G);
  require_rcond(luG, "SingularG", "G block");

  const Mat& A = m.spec().A;
  const Mat& B = m.spec().B;
  const Vec& a = m.spec().a;
  const double theta = m.theta();
  const Mat& P = vnext.P;
  const Vec& p = vnext.p;

  const Mat iB1_A1 = luB1.solve(f.A1);              // B1^{-1} A1
  const Vec iB1_a1 = luB1.solve(f.a1);              // B1^{-1} a1
  const Mat iG_A2 = luG.solve(f.A2);                // G^{-1} A2
  const Vec iG_a2 = luG.solve(f.a2);                // G^{-1} a2
  const Vec Ct_iB1_a1 = f.C.transpose() * iB1_a1;   // C'B1^{-1} a1
  const Mat Ct_iB1_A1 = f.C.transpose() * iB1_A1;   // C'B1^{-1} A1
  const Mat iG_Ct_iB1_A1 = luG.solve(Ct_iB1_A1);
  const Vec iG_Ct_iB1_a1 = luG.solve(Ct_iB1_a1);

  Eigen::PartialPivLU<Mat> luB1T(f.B1.transpose());
  const Mat A1t_iB1 = luB1T.solve(f.A1).transpose();  // A1'B1^{-1}
  const Vec iB1t_a1 = luB1T.solve(f.a1);              // B1^{-T} a1
  const Mat A1t_iB1_C = A1t_iB1 * f.C;                           // A1'B1^{-1}C
  const Vec Ct_iB1t_a1 = f.C.transpose() * iB1t_a1;              // (a1'B1^{-1}C)'

  ValueQuad v;
  Mat Pq = -f.A1.transpose() * iB1_A1
           - 2.0 * A1t_iB1_C * iG_A2
           + A1t_iB1_C * iG_Ct_iB1_A1
           + f.A2.transpose() * iG_A2;
  Pq += 2.0 * (theta * m.spec().M + 0.5 * A.transpose() * P * A);
  v.P = symmetrize(Pq);

  v.p = -f.A1.transpose() * iB1_a1
        - A1t_iB1_C * iG_a2
        + A1t_iB1_C * iG_Ct_iB1_a1
        - f.A2.transpose() * iG_Ct_iB1_a1
        + f.A2.transpose() * iG_a2
        + A.transpose() * P * a + theta * m.spec().m + A.transpose() * p;

  double r = -0.5 * f.a1.dot(iB1_a1)
             - Ct_iB1t_a1.dot(iG_a2)
             + 0.5 * Ct_iB1t_a1.dot(iG_Ct_iB1_a1)
             + 0.5 * f.a2.dot(iG_a2);
  r += 0.5 * (B.transpose() * m.Xi(t) * B * P).trace()
       + 0.5 * (m.Lambda(t) * P).trace()
       + vnext.r
       + 0.5 * a.dot(P * a) + a.dot(p)
       + theta * (m.Xi(t) * m.N(t)).trace();
  v.r = r;

  GainSet g = gains_from_fraktur(f);
  return {std::move(v), std::move(f), std::move(g)};
}

Solution solve(const ValidatedModel& m, TerminalConvention convention) {
  const int T = m.T();
  Solution sol{.value = std::vector<ValueQuad>(static_cast<std::size_t>(T) + 1),
               .gains = std::vector<GainSet>(static_cast<std::size_t>(T)),
               .fraktur = std::vector<FrakturSet>(static_cast<std::size_t>(T)),
               .model = m,
               .convention = convention,
               .saddle_verified = false};

  ValueQuad terminal;
  if (convention == TerminalConvention::Theorem1) {
    terminal.P = m.spec().M_T;
    terminal.p = m.spec().m_T;
  } else {
    terminal.P = 2.0 * m.theta() * m.spec().M_T;
    terminal.p = m.theta() * m.spec().m_T;
  }
  terminal.r = 0.0;
  sol.value[static_cast<std::size_t>(T)] = terminal;

  for (int t = T - 1; t >= 0; --t) {
    auto [v, f, g] = backward_step(sol.value[static_cast<std::size_t>(t) + 1], t, m);
    sol.value[static_cast<std::size_t>(t)] = std::move(v);
    sol.fraktur[static_cast<std::size_t>(t)] = std::move(f);
    sol.gains[static_cast<std::size_t>(t)] = std::move(g);
  }

  sol.saddle_verified = true;
  for (const auto& f : sol.fraktur) {
    if (!conditions::check_assumption1(f).pass()) {
      sol.saddle_verified = false;
      break;
    }
  }
  return sol;
}

std::tuple<Vec, Vec, Vec> stationary_controls(const FrakturSet& f, const Vec& x) {
  const auto du_ = f.B1.rows();
  const auto dx_ = f.B2.rows();
  Mat S(du_ + dx_, du_ + dx_);
  S << f.B1, f.C, f.C.transpose(), f.B2;
  Eigen::PartialPivLU<Mat> lu(S);
  require_rcond(lu, "SingularSystem", "coupled (u, gamma) system");
  Vec rhs(du_ + dx_);
  rhs.head(du_) = -(f.A1 * x + f.a1);
  rhs.tail(dx_) = -(f.A2 * x + f.a2);
  const Vec sol = lu.solve(rhs);
  return {sol.head(du_), sol.tail(dx_), Vec::Zero(du_)};
}

GainSet gains_from_fraktur(const FrakturSet& f) {
  const auto du_ = f.B1.rows();
  const auto dx_ = f.B2.rows();
  Mat S(du_ + dx_, du_ + dx_);
  S << f.B1, f.C, f.C.transpose(), f.B2;
  Eigen::PartialPivLU<Mat> lu(S);
  require_rcond(lu, "SingularSystem", "coupled (u, gamma) system");

  Mat rhs(du_ + dx_, dx_ + 1);
  rhs.block(0, 0, du_, dx_) = -f.A1;
  rhs.block(du_, 0, dx_, dx_) = -f.A2;
  rhs.block(0, dx_, du_, 1) = -f.a1;
  rhs.block(du_, dx_, dx_, 1) = -f.a2;
  const Mat sol = lu.solve(rhs);

  GainSet g;
  g.Du = sol.block(0, 0, du_, dx_);
  g.du = sol.block(0, dx_, du_, 1);
  g.Dg = sol.block(du_, 0, dx_, dx_);
  g.dg = sol.block(du_, dx_, dx_, 1);
  g.Deta = Mat::Zero(du_, dx_);
  g.deta = Vec::Zero(du_);
  return g;
}

double value_at(const Solution& sol, int t, const Vec& x) {
  const auto& v = sol.value.at(static_cast<std::size_t>(t));
  return 0.5 * x.dot(v.P * x) + x.dot(v.p) + v.r;
}

CriterionTransforms criterion_transforms(const Solution& sol) {
  const double v0 = value_at(sol, 0, sol.model.spec().x0);
  CriterionTransforms out;
  out.log_inf_I = v0;
  out.sup_J = -v0 / sol.model.theta();
  out.overflow = v0 > std::log(std::numeric_limits<double>::max());
  out.inf_I = out.overflow ? std::numeric_limits<double>::infinity() : std::exp(v0);
  return out;
}

double lemma1_expectation(const ValueQuad& vnext, const Vec& x, const Vec& u,
                          const Vec& gamma, const Vec& eta, const Vec& a,
                          const Mat& A, const Mat& B, const Mat& Lambda_t,
                          const Mat& Xi_t) {
  const Vec mu = a + A * x + B * (u + eta) + gamma;
  double val = 0.5 * mu.dot(vnext.P * mu) + vnext.p.dot(mu) + vnext.r;
  val += 0.5 * (B.transpose() * Xi_t * B * vnext.P).trace();
  val += 0.5 * (Lambda_t * vnext.P).trace();
  return val;
}

double lemma1_expectation(const ValueQuad& vnext, const Vec& x, const Vec& u,
                          const Vec& gamma, const Vec& eta, int t,
                          const ValidatedModel& m) {
  return lemma1_expectation(vnext, x, u, gamma, eta, m.spec().a, m.spec().A,
                            m.spec().B, m.Lambda(t), m.Xi(t));
}

std::pair<double, double> closed_form_controls_scalar(const FrakturSet& f,
                                                      double x) {
  if (f.B1.rows() != 1 || f.B2.rows() != 1)
    throw NumericalError("NotScalar",
                         "closed-form transcription is scalar-only");
  const double B1 = f.B1(0, 0), B2 = f.B2(0, 0), C = f.C(0, 0);
  const double A1 = f.A1(0, 0), A2 = f.A2(0, 0);
  const double a1 = f.a1(0), a2 = f.a2(0);
  const double det = B1 * B2 - C * C;
  if (det == 0.0)
    throw NumericalError("SingularSystem", "closed-form denominator vanishes");
  const double u = ((A2 * C - A1 * B2) * x + (C * a2 - B2 * a1)) / det;
  const double g = ((A1 * C - A2 * B1) * x + (C * a1 - B1 * a2)) / det;
  return {u, g};
}

}  // namespace leqg::solver
