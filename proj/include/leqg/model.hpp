#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace leqg {
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
}  // namespace leqg

namespace leqg::model {

// Complete problem data for one finite-horizon instance. Schedules (Lambda,
// Xi, N) carry one entry per step t = 0..T-1.
struct ModelSpec {
  Vec a;                    // state drift, d_x
  Mat A;                    // d_x x d_x
  Mat B;                    // d_x x d_u
  std::vector<Mat> Lambda;  // system-noise covariance per step, d_x x d_x
  std::vector<Mat> Xi;      // exploration covariance per step, d_u x d_u
  Mat M;                    // running state cost, d_x x d_x
  std::vector<Mat> N;       // running control cost per step, d_u x d_u
  Mat Q;                    // cross cost, d_u x d_x
  Vec m;                    // linear state cost, d_x
  Vec n;                    // linear control cost, d_u
  Mat M_T;                  // terminal state cost, d_x x d_x
  Vec m_T;                  // terminal linear cost, d_x
  double theta = 1.0;       // risk sensitivity, in (-1,0) or (0,inf)
  int T = 1;                // horizon
  Vec x0;                   // initial state, d_x

  int dx() const { return static_cast<int>(A.rows()); }
  int du() const { return static_cast<int>(B.cols()); }
};

class ValidatedModel {
public:
  const ModelSpec& spec() const { return spec_; }
  int dx() const { return spec_.dx(); }
  int du() const { return spec_.du(); }
  int T() const { return spec_.T; }
  double theta() const { return spec_.theta; }

  const Mat& Lambda(int t) const { return spec_.Lambda[t]; }
  const Mat& Xi(int t) const { return spec_.Xi[t]; }
  const Mat& N(int t) const { return spec_.N[t]; }
  const Mat& Lambda_inv(int t) const { return Lambda_inv_[t]; }
  const Mat& Xi_inv(int t) const { return Xi_inv_[t]; }
  const Mat& Lambda_sqrt(int t) const { return Lambda_sqrt_[t]; }
  const Mat& Xi_sqrt(int t) const { return Xi_sqrt_[t]; }

  bool scalar() const { return dx() == 1 && du() == 1; }

  // Bypass for test harnesses that inject degenerate data (for example zero
  // covariances, whose inverses are replaced by pseudo-inverses). Regular
  // code paths must go through validate().
  static ValidatedModel assume_valid(ModelSpec spec);

private:
  friend ValidatedModel validate(const ModelSpec& spec);
  explicit ValidatedModel(ModelSpec spec);

  ModelSpec spec_;
  std::vector<Mat> Lambda_inv_, Xi_inv_;
  std::vector<Mat> Lambda_sqrt_, Xi_sqrt_;
};

// Checks every structural invariant (dimensions, theta range, PSD/PD cost and
// covariance matrices) and returns the immutable validated instance. The
// thrown diagnostic lists all violations at once. M, N_t, M_T are
// symmetrized on ingest before testing.
ValidatedModel validate(const ModelSpec& spec);

// JSON text with keys exactly
//   a, A, B, Lambda, Xi, M, N, Q, m, n, M_T, m_T, theta, T, x0.
// Matrices are row-major nested arrays; plain numbers are accepted wherever a
// 1x1 block is expected. Schedule keys (Lambda, Xi, N) accept one entry
// (broadcast over t) or a per-step list of exactly T entries.
ModelSpec load_config(const std::string& text);
std::string serialize(const ModelSpec& spec);

// Bundled reference instance used by the CLI (`table2`) and the tests:
// scalar, a=0, A=-0.2, B=0.4, Lambda=Xi=0.15, M=2, N=2, Q=1, m=n=0, M_T=4,
// m_T=0, theta=1, T=25, x0=1.
ModelSpec table2();

// Value-function coefficients at one time index: V(x) = x'Px/2 + x'p + r.
struct ValueQuad {
  Mat P;
  Vec p;
  double r = 0.0;
};

// Shorthand coefficient bundle carrying the next-step value coefficients and
// the step-t model data. Indexed at t+1: built from ValueQuad at t+1.
struct FrakturSet {
  Mat A1;  // d_u x d_x :  B'P A + theta Q
  Vec a1;  // d_u       :  B'P a + B'p + theta n
  Mat A2;  // d_x x d_x :  P'A
  Vec a2;  // d_x       :  P'a + p
  Mat B1;  // d_u x d_u :  B'P B + 2 theta N_t
  Mat B2;  // d_x x d_x :  -Lambda_t^{-1} + P
  Mat B3;  // d_u x d_u :  -Xi_t^{-1} + B1
  Mat C;   // d_u x d_x :  B'P
  Mat G;   // d_x x d_x :  C' B1^{-1} C - B2
};

// Affine saddle-point policies at one time index:
//   u*(x) = Du x + du,  gamma*(x) = Dg x + dg,  eta*(x) = Deta x + deta,
// with (Deta, deta) identically zero.
struct GainSet {
  Mat Du;    // d_u x d_x
  Vec du;    // d_u
  Mat Dg;    // d_x x d_x
  Vec dg;    // d_x
  Mat Deta;  // d_u x d_x
  Vec deta;  // d_u
};

}  // namespace leqg::model
