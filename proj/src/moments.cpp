#include "leqg/detail/moments.hpp"

namespace leqg::detail {

AffinePolicy AffinePolicy::zeros(int T, int dx, int du) {
  AffinePolicy K;
  K.D.assign(T, Mat::Zero(du, dx));
  K.E.assign(T, Mat::Zero(dx, dx));
  K.F.assign(T, Mat::Zero(du, dx));
  K.d.assign(T, Vec::Zero(du));
  K.e.assign(T, Vec::Zero(dx));
  K.f.assign(T, Vec::Zero(du));
  return K;
}

MomentRun propagate_policy_value(const model::ValidatedModel& m,
                                 const AffinePolicy& K, const Mat& PT,
                                 const Vec& pT, double rho2) {
  const auto& s = m.spec();
  const int T = s.T;
  const int dx = s.dx();
  const double theta = s.theta;

  MomentRun run;
  run.mu.resize(T + 1);
  run.X.resize(T + 1);
  run.Abar.resize(T);
  run.abar.resize(T);

  run.mu[0] = s.x0;
  run.X[0] = s.x0 * s.x0.transpose() + rho2 * Mat::Identity(dx, dx);

  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec& mu = run.mu[t];
    const Mat& X = run.X[t];

    const Mat H = K.D[t] + K.F[t];  // mean control map, u + eta
    const Vec h = K.d[t] + K.f[t];

    // Expected pi-integrated running cost,
    //   E[x'Mx + u~'Nu~ + u~'Qx + m'x + n'u~],
    // with u~ of mean Hx + h and covariance Xi_t, so the N-quadratic picks up
    // tr(Xi N) on top of the mean-control terms.
    double running = 0.0;
    running += (s.M * X).trace();
    running += (H.transpose() * m.N(t) * H * X).trace() +
               2.0 * h.dot(m.N(t) * H * mu) + h.dot(m.N(t) * h) +
               (m.Xi(t) * m.N(t)).trace();
    running += (H.transpose() * s.Q * X).trace() + h.dot(s.Q * mu);
    running += s.m.dot(mu);
    running += s.n.dot(H * mu + h);

    // Relative-entropy rates of the mean shifts (E,e) against Lambda and
    // (F,f) against Xi.
    double ent = 0.0;
    ent += 0.5 * ((K.E[t].transpose() * m.Lambda_inv(t) * K.E[t] * X).trace() +
                  2.0 * K.e[t].dot(m.Lambda_inv(t) * K.E[t] * mu) +
                  K.e[t].dot(m.Lambda_inv(t) * K.e[t]));
    ent += 0.5 * ((K.F[t].transpose() * m.Xi_inv(t) * K.F[t] * X).trace() +
                  2.0 * K.f[t].dot(m.Xi_inv(t) * K.F[t] * mu) +
                  K.f[t].dot(m.Xi_inv(t) * K.f[t]));

    total += theta * running - ent;

    const Mat Abar = s.A + s.B * H + K.E[t];
    const Vec abar = s.a + s.B * h + K.e[t];
    run.Abar[t] = Abar;
    run.abar[t] = abar;

    const Mat W = m.Lambda(t) + s.B * m.Xi(t) * s.B.transpose();
    run.mu[t + 1] = abar + Abar * mu;
    run.X[t + 1] = Abar * X * Abar.transpose() + Abar * mu * abar.transpose() +
                   abar * mu.transpose() * Abar.transpose() +
                   abar * abar.transpose() + W;
  }

  total += 0.5 * (PT * run.X[T]).trace() + pT.dot(run.mu[T]);
  run.value = total;
  return run;
}

}  // namespace leqg::detail
