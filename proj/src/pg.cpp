#include "leqg/pg.hpp"

#include <algorithm>
#include <cmath>

#include "leqg/errors.hpp"
#include "leqg/rng.hpp"

namespace leqg::pg {

namespace {

void terminal_quad(const model::ModelSpec& s,
                   solver::TerminalConvention convention, Mat& PT, Vec& pT) {
  if (convention == solver::TerminalConvention::Theorem1) {
    PT = s.M_T;
    pT = s.m_T;
  } else {
    PT = 2.0 * s.theta * s.M_T;
    pT = s.theta * s.m_T;
  }
}

detail::AffinePolicy as_policy(const PolicyParams& K) {
  detail::AffinePolicy P;
  P.D = K.D;
  P.d = K.d;
  P.E = K.E;
  P.e = K.e;
  P.F = K.F;
  P.f = K.f;
  return P;
}

}  // namespace

PolicyParams PolicyParams::zeros(int T, int dx, int du) {
  PolicyParams K;
  K.D.assign(T, Mat::Zero(du, dx));
  K.E.assign(T, Mat::Zero(dx, dx));
  K.F.assign(T, Mat::Zero(du, dx));
  K.d.assign(T, Vec::Zero(du));
  K.e.assign(T, Vec::Zero(dx));
  K.f.assign(T, Vec::Zero(du));
  return K;
}

PolicyParams PolicyParams::from_gains(
    const std::vector<model::GainSet>& gains) {
  PolicyParams K;
  for (const auto& g : gains) {
    K.D.push_back(g.Du);
    K.d.push_back(g.du);
    K.E.push_back(g.Dg);
    K.e.push_back(g.dg);
    K.F.push_back(g.Deta);
    K.f.push_back(g.deta);
  }
  return K;
}

CriticParams CriticParams::zeros(int T, int dx) {
  CriticParams c;
  c.P.assign(T + 1, Mat::Zero(dx, dx));
  c.p.assign(T + 1, Vec::Zero(dx));
  c.r.assign(T + 1, 0.0);
  return c;
}

CriticParams CriticParams::initial(const ValidatedModel& m,
                                   solver::TerminalConvention convention) {
  CriticParams c = zeros(m.T(), m.dx());
  Mat PT;
  Vec pT;
  terminal_quad(m.spec(), convention, PT, pT);
  c.P[m.T()] = PT;
  c.p[m.T()] = pT;
  return c;
}

Rollout sample_rollout(const ValidatedModel& m, const PolicyParams& K,
                       std::uint64_t seed, std::uint64_t substream,
                       solver::TerminalConvention convention) {
  const auto& s = m.spec();
  const int T = s.T;
  rng::Stream stream(seed, substream);

  Rollout roll;
  roll.x.reserve(T + 1);
  roll.run.resize(T);
  roll.ent.resize(T);

  Vec x = s.x0;
  Vec z_v(s.du()), z_w(s.dx());
  for (int t = 0; t < T; ++t) {
    roll.x.push_back(x);
    const Vec ubar = K.D[t] * x + K.d[t];
    const Vec gamma = K.E[t] * x + K.e[t];
    const Vec eta = K.F[t] * x + K.f[t];

    for (int i = 0; i < s.du(); ++i) z_v(i) = stream.normal();
    for (int i = 0; i < s.dx(); ++i) z_w(i) = stream.normal();
    const Vec v = eta + m.Xi_sqrt(t) * z_v;
    const Vec w = gamma + m.Lambda_sqrt(t) * z_w;

    const Vec ue = ubar + eta;
    double run = x.dot(s.M * x) + (s.Xi[t] * s.N[t]).trace();
    run += ue.dot(s.N[t] * ue) + ue.dot(s.Q * x);
    run += s.m.dot(x) + s.n.dot(ue);
    roll.run[t] = s.theta * run;
    roll.ent[t] = 0.5 * (gamma.dot(m.Lambda_inv(t) * gamma) +
                         eta.dot(m.Xi_inv(t) * eta));

    x = s.a + s.A * x + s.B * (ubar + v) + w;
  }
  roll.x.push_back(x);

  Mat PT;
  Vec pT;
  terminal_quad(s, convention, PT, pT);
  roll.terminal = 0.5 * x.dot(PT * x) + pT.dot(x);

  double C = roll.terminal;
  for (int t = 0; t < T; ++t) C += roll.run[t] - roll.ent[t];
  roll.C = C;
  return roll;
}

McEstimate objective_estimate(const ValidatedModel& m, const PolicyParams& K,
                              std::size_t n_rollouts, std::uint64_t seed,
                              solver::TerminalConvention convention) {
  if (n_rollouts < 1)
    throw ConfigError("DimensionMismatch",
                      "objective_estimate needs n_rollouts >= 1");
  std::vector<double> c(n_rollouts);
  for (std::size_t i = 0; i < n_rollouts; ++i)
    c[i] = sample_rollout(m, K, seed, i, convention).C;
  McEstimate est;
  est.estimate = rng::pairwise_mean(c);
  if (n_rollouts > 1) {
    double ssq = 0.0;
    for (double v : c) ssq += (v - est.estimate) * (v - est.estimate);
    est.std_error =
        std::sqrt(ssq / double(n_rollouts - 1) / double(n_rollouts));
  }
  return est;
}

double exact_objective(const ValidatedModel& m, const PolicyParams& K,
                       double rho2, solver::TerminalConvention convention) {
  Mat PT;
  Vec pT;
  terminal_quad(m.spec(), convention, PT, pT);
  return detail::propagate_policy_value(m, as_policy(K), PT, pT, rho2).value;
}

double PolicyGrad::inf_norm() const {
  double v = 0.0;
  for (const auto& blk : {D, E, F})
    for (const auto& g : blk) v = std::max(v, g.lpNorm<Eigen::Infinity>());
  for (const auto& blk : {d, e, f})
    for (const auto& g : blk) v = std::max(v, g.lpNorm<Eigen::Infinity>());
  return v;
}

PolicyGrad exact_objective_grad(const ValidatedModel& m,
                                const PolicyParams& K, double rho2,
                                std::vector<Mat>* sigma_aug,
                                solver::TerminalConvention convention) {
  const auto& s = m.spec();
  const int T = s.T;
  const int dx = s.dx();
  const double theta = s.theta;

  Mat PT;
  Vec pT;
  terminal_quad(s, convention, PT, pT);
  const auto run = detail::propagate_policy_value(m, as_policy(K), PT, pT, rho2);

  if (sigma_aug) {
    sigma_aug->assign(T, Mat());
    for (int t = 0; t < T; ++t) {
      Mat sig(dx + 1, dx + 1);
      sig.topLeftCorner(dx, dx) = run.X[t];
      sig.topRightCorner(dx, 1) = run.mu[t];
      sig.bottomLeftCorner(1, dx) = run.mu[t].transpose();
      sig(dx, dx) = 1.0;
      sigma_aug->at(t) = std::move(sig);
    }
  }

  PolicyGrad grad;
  grad.D.resize(T);
  grad.d.resize(T);
  grad.E.resize(T);
  grad.e.resize(T);
  grad.F.resize(T);
  grad.f.resize(T);

  Mat S = 0.5 * PT;
  Vec mv = pT;
  for (int t = T - 1; t >= 0; --t) {
    const Mat& X = run.X[t];
    const Vec& mu = run.mu[t];
    const Mat& Abar = run.Abar[t];
    const Vec& abar = run.abar[t];
    const Mat H = K.D[t] + K.F[t];
    const Vec h = K.d[t] + K.f[t];
    const Mat Ssym = S + S.transpose();

    const Mat dJdA = mv * mu.transpose() + Ssym * (Abar * X + abar * mu.transpose());
    const Vec dJda = mv + Ssym * (Abar * mu + abar);

    const Mat dgdH = theta * (2.0 * s.N[t] * H * X +
                              2.0 * s.N[t] * h * mu.transpose() + s.Q * X +
                              s.n * mu.transpose());
    const Vec dgdh = theta * (2.0 * s.N[t] * (H * mu + h) + s.Q * mu + s.n);

    grad.D[t] = dgdH + s.B.transpose() * dJdA;
    grad.F[t] = grad.D[t] - m.Xi_inv(t) * (K.F[t] * X + K.f[t] * mu.transpose());
    grad.E[t] = dJdA - m.Lambda_inv(t) * (K.E[t] * X + K.e[t] * mu.transpose());
    grad.d[t] = dgdh + s.B.transpose() * dJda;
    grad.f[t] = grad.d[t] - m.Xi_inv(t) * (K.F[t] * mu + K.f[t]);
    grad.e[t] = dJda - m.Lambda_inv(t) * (K.E[t] * mu + K.e[t]);

    const Mat dgdX = theta * (s.M + H.transpose() * s.N[t] * H +
                              s.Q.transpose() * H) -
                     0.5 * K.E[t].transpose() * m.Lambda_inv(t) * K.E[t] -
                     0.5 * K.F[t].transpose() * m.Xi_inv(t) * K.F[t];
    const Vec dgdmu =
        theta * (2.0 * H.transpose() * s.N[t] * h + s.Q.transpose() * h + s.m +
                 H.transpose() * s.n) -
        K.E[t].transpose() * m.Lambda_inv(t) * K.e[t] -
        K.F[t].transpose() * m.Xi_inv(t) * K.f[t];

    const Vec mv_next = dgdmu + Abar.transpose() * (mv + Ssym * abar);
    S = dgdX + Abar.transpose() * S * Abar;
    mv = mv_next;
  }
  return grad;
}

PolicyParams npg_step(const PolicyParams& K, const PolicyGrad& grad,
                      const std::vector<Mat>& sigma_aug, double delta,
                      bool* regularized) {
  const int T = int(K.D.size());
  if (int(sigma_aug.size()) != T)
    throw ConfigError("DimensionMismatch",
                      "sigma schedule length does not match the policy");
  if (regularized) *regularized = false;

  const int daug = int(sigma_aug.empty() ? 0 : sigma_aug[0].rows());
  Mat pooled = Mat::Zero(daug, daug);
  for (const auto& sig : sigma_aug) pooled += sig;
  if (T > 0) pooled /= double(T);
  Eigen::LLT<Mat> pooled_llt(pooled);

  PolicyParams out = K;
  for (int t = 0; t < T; ++t) {
    Eigen::LLT<Mat> llt(sigma_aug[t]);
    const Eigen::LLT<Mat>* use = &llt;
    if (llt.info() != Eigen::Success) {
      if (pooled_llt.info() == Eigen::Success) {
        use = &pooled_llt;
      } else {
        llt.compute(sigma_aug[t] +
                    1e-8 * Mat::Identity(daug, daug));
        if (regularized) *regularized = true;
        use = &llt;
      }
    }

    auto precondition = [&](const Mat& gX, const Vec& gx) {
      Mat blk(gX.rows(), gX.cols() + 1);
      blk.leftCols(gX.cols()) = gX;
      blk.rightCols(1) = gx;
      Mat nat = use->solve(blk.transpose()).transpose();
      return nat;
    };

    const Mat natD = precondition(grad.D[t], grad.d[t]);
    const Mat natE = precondition(grad.E[t], grad.e[t]);
    const Mat natF = precondition(grad.F[t], grad.f[t]);

    const int dxcols = int(grad.D[t].cols());
    out.D[t] -= delta * natD.leftCols(dxcols);
    out.d[t] -= delta * natD.rightCols(1);
    out.E[t] += delta * natE.leftCols(dxcols);
    out.e[t] += delta * natE.rightCols(1);
    out.F[t] += delta * natF.leftCols(dxcols);
    out.f[t] += delta * natF.rightCols(1);
  }
  return out;
}

double critic_value(const CriticParams& critic, int t, const Vec& x) {
  return 0.5 * x.dot(critic.P[t] * x) + critic.p[t].dot(x) + critic.r[t];
}

CriticParams critic_td_update(const CriticParams& critic,
                              const std::vector<Rollout>& batch,
                              double learn_rate) {
  if (batch.empty())
    throw ConfigError("DimensionMismatch", "critic_td_update needs a batch");
  CriticParams out = critic;
  const int T = int(out.P.size()) - 1;
  for (const auto& roll : batch) {
    for (int t = T - 1; t >= 0; --t) {
      const Vec& x = roll.x[t];
      const double target =
          roll.run[t] - roll.ent[t] + critic_value(out, t + 1, roll.x[t + 1]);
      const double err = target - critic_value(out, t, x);
      const double x2 = x.squaredNorm();
      const double denom = 0.25 * x2 * x2 + x2 + 1.0;
      const double step = learn_rate * err / denom;
      out.P[t] += step * 0.5 * (x * x.transpose());
      out.p[t] += step * x;
      out.r[t] += step;
    }
  }
  return out;
}

TrainResult train(const ValidatedModel& m, const TrainConfig& config) {
  const auto& s = m.spec();
  const int T = s.T;
  if (config.episodes < 0 || config.rollouts < 1)
    throw ConfigError("DimensionMismatch",
                      "train needs episodes >= 0 and rollouts >= 1");

  const auto sol = solver::solve(m, config.convention);

  TrainResult res;
  res.K = PolicyParams::zeros(T, s.dx(), s.du());
  res.critic = CriticParams::initial(m, config.convention);

  auto objective_now = [&](const PolicyParams& K,
                           std::uint64_t probe_sub) -> double {
    if (!config.model_free)
      return exact_objective(m, K, 0.0, config.convention);
    std::vector<double> c(std::size_t(config.rollouts));
    for (int i = 0; i < config.rollouts; ++i)
      c[std::size_t(i)] =
          sample_rollout(m, K, config.seed, probe_sub + std::uint64_t(i),
                         config.convention)
              .C;
    return rng::pairwise_mean(c);
  };

  auto gaps = [&](const PolicyParams& K, double& gain_gap,
                  double& eta_norm) {
    gain_gap = 0.0;
    eta_norm = 0.0;
    for (int t = 0; t < T; ++t) {
      gain_gap = std::max(
          {gain_gap, (K.D[t] - sol.gains[t].Du).lpNorm<Eigen::Infinity>(),
           (K.d[t] - sol.gains[t].du).lpNorm<Eigen::Infinity>(),
           (K.E[t] - sol.gains[t].Dg).lpNorm<Eigen::Infinity>(),
           (K.e[t] - sol.gains[t].dg).lpNorm<Eigen::Infinity>()});
      eta_norm = std::max({eta_norm, K.F[t].lpNorm<Eigen::Infinity>(),
                           K.f[t].lpNorm<Eigen::Infinity>()});
    }
  };

  const double C0 = objective_now(res.K, 1u << 20);
  const double diverge_scale = 10.0 * std::max(1.0, std::abs(C0));

  for (int ep = 0; ep < config.episodes; ++ep) {
    const double delta = config.delta0 / (1.0 + double(ep) / 100.0);

    PolicyGrad grad;
    std::vector<Mat> sigma;
    if (!config.model_free) {
      grad = exact_objective_grad(m, res.K, config.rho2, &sigma,
                                  config.convention);
    } else {
      // Two-point zeroth-order probe along one Gaussian direction with
      // common random numbers.
      rng::Stream dir(config.seed, 500000u + std::uint64_t(ep));
      PolicyGrad U;
      U.D.resize(T);
      U.d.resize(T);
      U.E.resize(T);
      U.e.resize(T);
      U.F.resize(T);
      U.f.resize(T);
      auto fill_mat = [&dir](int r, int c) {
        Mat g(r, c);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) g(i, j) = dir.normal();
        return g;
      };
      for (int t = 0; t < T; ++t) {
        U.D[t] = fill_mat(s.du(), s.dx());
        U.d[t] = fill_mat(s.du(), 1);
        U.E[t] = fill_mat(s.dx(), s.dx());
        U.e[t] = fill_mat(s.dx(), 1);
        U.F[t] = fill_mat(s.du(), s.dx());
        U.f[t] = fill_mat(s.du(), 1);
      }
      const double sig_probe = 1e-3;
      auto shifted = [&](double sgn) {
        PolicyParams Ks = res.K;
        for (int t = 0; t < T; ++t) {
          Ks.D[t] += sgn * sig_probe * U.D[t];
          Ks.d[t] += sgn * sig_probe * U.d[t];
          Ks.E[t] += sgn * sig_probe * U.E[t];
          Ks.e[t] += sgn * sig_probe * U.e[t];
          Ks.F[t] += sgn * sig_probe * U.F[t];
          Ks.f[t] += sgn * sig_probe * U.f[t];
        }
        return Ks;
      };
      const std::uint64_t base = std::uint64_t(ep) * 10000u + (1u << 21);
      double cp = 0.0, cm = 0.0;
      for (int i = 0; i < config.rollouts; ++i) {
        cp += sample_rollout(m, shifted(+1.0), config.seed,
                             base + std::uint64_t(i), config.convention)
                  .C;
        cm += sample_rollout(m, shifted(-1.0), config.seed,
                             base + std::uint64_t(i), config.convention)
                  .C;
      }
      const double slope =
          (cp - cm) / (2.0 * sig_probe * double(config.rollouts));
      grad.D.resize(T);
      grad.d.resize(T);
      grad.E.resize(T);
      grad.e.resize(T);
      grad.F.resize(T);
      grad.f.resize(T);
      for (int t = 0; t < T; ++t) {
        grad.D[t] = slope * U.D[t];
        grad.d[t] = slope * U.d[t];
        grad.E[t] = slope * U.E[t];
        grad.e[t] = slope * U.e[t];
        grad.F[t] = slope * U.F[t];
        grad.f[t] = slope * U.f[t];
      }
      // Empirical preconditioner from on-policy rollouts.
      sigma.assign(T, Mat::Zero(s.dx() + 1, s.dx() + 1));
      for (int i = 0; i < config.rollouts; ++i) {
        const auto roll = sample_rollout(m, res.K, config.seed,
                                         base + 5000u + std::uint64_t(i),
                                         config.convention);
        for (int t = 0; t < T; ++t) {
          Vec aug(s.dx() + 1);
          aug.head(s.dx()) = roll.x[t];
          aug(s.dx()) = 1.0;
          sigma[t] += aug * aug.transpose();
        }
      }
      for (auto& sg : sigma) sg /= double(config.rollouts);
    }

    res.K = npg_step(res.K, grad, sigma, delta);

    const double alpha = 0.1 / (1.0 + double(ep) / 500.0);
    std::vector<Rollout> batch;
    batch.reserve(std::size_t(config.rollouts));
    for (int i = 0; i < config.rollouts; ++i)
      batch.push_back(sample_rollout(m, res.K, config.seed,
                                     std::uint64_t(ep) * 10000u +
                                         std::uint64_t(i),
                                     config.convention));
    res.critic = critic_td_update(res.critic, batch, alpha);

    HistoryEntry h;
    h.episode = ep;
    h.C_estimate = objective_now(res.K, std::uint64_t(ep) * 10000u + 7000u);
    gaps(res.K, h.gain_gap, h.eta_norm);
    res.history.push_back(h);

    if (std::abs(h.C_estimate) > diverge_scale)
      throw NumericalError("Diverged",
                           "objective magnitude " +
                               std::to_string(h.C_estimate) +
                               " exceeded ten times its initial scale");
  }
  return res;
}

}  // namespace leqg::pg
