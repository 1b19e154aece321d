#include "leqg/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "leqg/errors.hpp"

namespace leqg::conditions {
namespace {

constexpr double kTol = 1e-10;

double scale_of(const Vec& eigs) {
  return std::max(1.0, eigs.cwiseAbs().maxCoeff());
}

bool posdef(const Mat& X, double* min_eig) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (X + X.transpose()),
                                        Eigen::EigenvaluesOnly);
  *min_eig = es.eigenvalues().minCoeff();
  return *min_eig > kTol * scale_of(es.eigenvalues());
}

bool negdef(const Mat& X, double* max_eig) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (X + X.transpose()),
                                        Eigen::EigenvaluesOnly);
  *max_eig = es.eigenvalues().maxCoeff();
  return *max_eig < -kTol * scale_of(es.eigenvalues());
}

Mat hessian_block(const FrakturSet& f) {
  const auto dx_ = f.B2.rows();
  const auto du_ = f.B3.rows();
  Mat H(dx_ + du_, dx_ + du_);
  H << f.B2, f.C.transpose(), f.C, f.B3;
  return H;
}

bool leading_minors_positive(const Mat& X) {
  for (Eigen::Index k = 1; k <= X.rows(); ++k) {
    if (!(X.topLeftCorner(k, k).determinant() > 0.0)) return false;
  }
  return true;
}

}  // namespace

bool SaddleReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const SaddleEntry& e) { return e.pass(); });
}

SaddleEntry check_assumption1(const FrakturSet& f) {
  SaddleEntry e;

  e.b1_pass = posdef(f.B1, &e.b1_min_eig);
  if (!e.b1_pass) e.violations.emplace_back("B1 not positive definite");

  const Mat H = hessian_block(f);
  const Mat negH = -H;
  double negH_min = 0.0;
  e.negH_pass = posdef(negH, &negH_min);
  e.negH_leading_minors_ok = leading_minors_positive(negH);
  e.det_negH = negH.determinant();
  e.det_H = H.determinant();

  if (!e.negH_pass) {
    e.violations.emplace_back("negated (gamma,eta) Hessian not positive definite");
    double ext = 0.0;
    if (!negdef(f.B2, &ext)) e.violations.emplace_back("B2 not negative definite");
    if (!negdef(f.B3, &ext)) e.violations.emplace_back("B3 not negative definite");
    if (!(e.det_negH > 0.0)) e.violations.emplace_back("det(-H) not positive");
  }
  return e;
}

SylvesterFlags sylvester_conditions(const FrakturSet& f) {
  SylvesterFlags flags;
  const Mat H = hessian_block(f);
  const Mat negH = -H;
  flags.det_negH = negH.determinant();
  flags.det_H = H.determinant();
  flags.det_positive = leading_minors_positive(negH) && flags.det_negH > 0.0;
  double ext = 0.0;
  flags.b2_negdef = negdef(f.B2, &ext);
  flags.b3_negdef = negdef(f.B3, &ext);
  return flags;
}

Prop4Bounds prop4_bounds(const ValidatedModel& m, double P_next, int t) {
  if (!m.scalar())
    throw NumericalError("NotScalar", "explicit bounds are scalar-only");
  if (!(m.theta() > 0.0))
    throw ConfigError("ThetaOutOfRange",
                      "explicit bounds require theta > 0");

  const double B = m.spec().B(0, 0);
  const double theta = m.theta();
  const double Nt = m.N(t)(0, 0);
  const double lam_inv = m.Lambda_inv(t)(0, 0);

  Prop4Bounds b;
  b.N_lower = std::max(0.0, -B * B * P_next / (2.0 * theta));
  b.Lambda_inv_lower = P_next;
  if (P_next > 0.0) {
    b.Xi_inv_lower = 2.0 * theta * Nt + B * B * P_next;
  } else {
    b.Xi_inv_lower =
        2.0 * theta * Nt + lam_inv * B * B * P_next / (P_next - lam_inv);
  }
  b.caveat = m.spec().Q.cwiseAbs().maxCoeff() != 0.0 ||
             m.spec().m.cwiseAbs().maxCoeff() != 0.0 ||
             m.spec().n.cwiseAbs().maxCoeff() != 0.0;
  return b;
}

SaddleReport check_full_horizon(const solver::Solution& sol) {
  SaddleReport report;
  const int T = sol.model.T();
  report.entries.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    SaddleEntry e = check_assumption1(sol.fraktur[static_cast<std::size_t>(t)]);
    e.t = t;
    if (sol.model.scalar() && sol.model.theta() > 0.0) {
      const auto& Pn = sol.value[static_cast<std::size_t>(t) + 1].P;
      const Prop4Bounds b = prop4_bounds(sol.model, Pn(0, 0), t);
      e.prop4_available = true;
      e.N_lower = b.N_lower;
      e.Lambda_inv_lower = b.Lambda_inv_lower;
      e.Xi_inv_lower = b.Xi_inv_lower;
      e.prop4_caveat = b.caveat;
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace leqg::conditions
