#include "leqg/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "leqg/conditions.hpp"
#include "leqg/errors.hpp"
#include "leqg/rng.hpp"

namespace leqg::simulate {

namespace {

Vec draw(rng::Stream& stream, int n) {
  Vec z(n);
  for (int i = 0; i < n; ++i) z(i) = stream.normal();
  return z;
}

double running_increment(const model::ModelSpec& s, int t, const Vec& x,
                         const Vec& ue) {
  double c = x.dot(s.M * x) + (s.Xi[t] * s.N[t]).trace();
  c += ue.dot(s.N[t] * ue) + ue.dot(s.Q * x);
  c += s.m.dot(x) + s.n.dot(ue);
  return c;
}

Trajectory run_one(const ValidatedModel& m, const solver::Solution& sol,
                   Measure measure, std::uint64_t seed,
                   std::uint64_t substream) {
  const auto& s = m.spec();
  const int T = s.T;
  rng::Stream stream(seed, substream);

  Trajectory traj;
  traj.measure = measure;
  traj.seed = seed;
  traj.steps.reserve(T);

  Vec x = s.x0;
  double G = 0.0;
  for (int t = 0; t < T; ++t) {
    StepRecord rec;
    rec.x = x;
    rec.u_star = sol.gains[t].Du * x + sol.gains[t].du;
    rec.gamma_star = sol.gains[t].Dg * x + sol.gains[t].dg;
    rec.eta_star = sol.gains[t].Deta * x + sol.gains[t].deta;

    Vec v = m.Xi_sqrt(t) * draw(stream, s.du());
    Vec w = m.Lambda_sqrt(t) * draw(stream, s.dx());
    if (measure == Measure::Shifted) {
      v += rec.eta_star;
      w += rec.gamma_star;
    }
    rec.v = v;
    rec.w = w;

    const Vec ue = rec.u_star + rec.eta_star;
    rec.running_cost = running_increment(s, t, x, ue);
    G += rec.running_cost;

    x = s.a + s.A * x + s.B * (rec.u_star + v) + w;
    traj.steps.push_back(std::move(rec));
  }
  traj.x_T = x;
  traj.terminal_cost = x.dot(s.M_T * x) + x.dot(s.m_T);
  traj.total_G = G + traj.terminal_cost;
  return traj;
}

}  // namespace

Trajectory run_trajectory(const ValidatedModel& m, const solver::Solution& sol,
                          Measure measure, std::uint64_t seed) {
  return run_one(m, sol, measure, seed, 0);
}

BatchSummary run_batch(const ValidatedModel& m, const solver::Solution& sol,
                       Measure measure, std::size_t n_runs,
                       std::uint64_t seed) {
  if (n_runs < 1)
    throw ConfigError("DimensionMismatch", "run_batch needs n_runs >= 1");
  const int T = m.T();
  const int dx = m.dx();
  const int du = m.du();

  BatchSummary sum;
  sum.runs = n_runs;
  sum.seed = seed;
  sum.measure = measure;
  sum.mean_x.assign(T + 1, Vec::Zero(dx));
  sum.var_x.assign(T + 1, Vec::Zero(dx));
  sum.mean_u.assign(T, Vec::Zero(du));
  sum.var_u.assign(T, Vec::Zero(du));
  sum.mean_w.assign(T, Vec::Zero(dx));

  std::vector<Vec> sx(T + 1, Vec::Zero(dx)), sxx(T + 1, Vec::Zero(dx));
  std::vector<Vec> su(T, Vec::Zero(du)), suu(T, Vec::Zero(du));
  std::vector<double> theta_G(n_runs);

  const double theta = m.theta();
  for (std::size_t i = 0; i < n_runs; ++i) {
    Trajectory traj = run_one(m, sol, measure, seed, i);
    for (int t = 0; t < T; ++t) {
      const Vec& x = traj.steps[t].x;
      const Vec& u = traj.steps[t].u_star;
      sx[t] += x;
      sxx[t] += x.cwiseProduct(x);
      su[t] += u;
      suu[t] += u.cwiseProduct(u);
      sum.mean_w[t] += traj.steps[t].w;
    }
    sx[T] += traj.x_T;
    sxx[T] += traj.x_T.cwiseProduct(traj.x_T);
    theta_G[i] = theta * traj.total_G;
  }

  const double n = double(n_runs);
  for (int t = 0; t <= T; ++t) {
    sum.mean_x[t] = sx[t] / n;
    sum.var_x[t] =
        n > 1 ? Vec((sxx[t] - n * sum.mean_x[t].cwiseProduct(sum.mean_x[t])) /
                    (n - 1))
              : Vec::Zero(dx);
  }
  for (int t = 0; t < T; ++t) {
    sum.mean_u[t] = su[t] / n;
    sum.var_u[t] =
        n > 1 ? Vec((suu[t] - n * sum.mean_u[t].cwiseProduct(sum.mean_u[t])) /
                    (n - 1))
              : Vec::Zero(du);
    sum.mean_w[t] /= n;
  }

  sum.mean_theta_G = rng::pairwise_mean(theta_G);
  const double shift = *std::max_element(theta_G.begin(), theta_G.end());
  std::vector<double> weights(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i)
    weights[i] = std::exp(theta_G[i] - shift);
  sum.log_mean_exp_theta_G = shift + std::log(rng::pairwise_mean(weights));
  return sum;
}

EstimateRecord estimate_ab(const std::vector<Transition>& transitions,
                           const ValidatedModel& prior) {
  const auto& s = prior.spec();
  const int dx = s.dx();
  const int du = s.du();
  const int k = dx + du;
  const int n = static_cast<int>(transitions.size());
  if (n < k)
    throw NumericalError("RankDeficient",
                         "need at least " + std::to_string(k) +
                             " transitions, got " + std::to_string(n));

  Mat Z(n, k);
  Mat Y(n, dx);
  for (int i = 0; i < n; ++i) {
    Z.block(i, 0, 1, dx) = transitions[i].x.transpose();
    Z.block(i, dx, 1, du) = transitions[i].u_applied.transpose();
    Y.row(i) = (transitions[i].x_next - s.a).transpose();
  }

  Eigen::ColPivHouseholderQR<Mat> qr(Z);
  if (qr.rank() < k)
    throw NumericalError("RankDeficient",
                         "regressor matrix rank " + std::to_string(qr.rank()) +
                             " < " + std::to_string(k));
  const Mat coef = qr.solve(Y);  // k x dx, stacked [A'; B']

  EstimateRecord rec;
  rec.A_hat = coef.topRows(dx).transpose();
  rec.B_hat = coef.bottomRows(du).transpose();
  rec.samples = std::size_t(n);

  const Mat resid = Y - Z * coef;
  const int dof = std::max(n - k, 1);
  rec.resid_cov = (resid.transpose() * resid) / double(dof);
  rec.resid_cov = 0.5 * (rec.resid_cov + rec.resid_cov.transpose());

  const Mat ztz_inv = (Z.transpose() * Z).fullPivLu().inverse();
  rec.se_A.resize(dx, dx);
  rec.se_B.resize(dx, du);
  for (int i = 0; i < dx; ++i) {
    for (int j = 0; j < dx; ++j)
      rec.se_A(i, j) = std::sqrt(rec.resid_cov(i, i) * ztz_inv(j, j));
    for (int l = 0; l < du; ++l)
      rec.se_B(i, l) = std::sqrt(rec.resid_cov(i, i) * ztz_inv(dx + l, dx + l));
  }
  return rec;
}

namespace {

model::ValidatedModel with_dynamics(const ValidatedModel& truth, const Mat& A,
                                    const Mat& B) {
  model::ModelSpec spec = truth.spec();
  spec.A = A;
  spec.B = B;
  return model::validate(spec);
}

// Step-4 verification of the explicit scalar bounds against the estimated
// recursion. Returns (available, pass); throws when the Lambda bound rules
// out every positive-definite exploration covariance.
std::pair<bool, bool> verify_prop4(const ValidatedModel& est,
                                   const solver::Solution& sol) {
  if (!est.scalar() || est.theta() <= 0.0) return {false, false};
  bool pass = true;
  for (int t = 0; t < est.T(); ++t) {
    const double P_next = sol.value[t + 1].P(0, 0);
    const auto b = conditions::prop4_bounds(est, P_next, t);
    const double lam_inv = est.Lambda_inv(t)(0, 0);
    const double xi_inv = est.Xi_inv(t)(0, 0);
    if (lam_inv <= b.Lambda_inv_lower)
      throw NumericalError(
          "ConditionsUnsatisfiable",
          "at t=" + std::to_string(t) + ": Lambda^{-1}=" +
              std::to_string(lam_inv) + " <= P_{t+1}=" +
              std::to_string(b.Lambda_inv_lower) +
              "; no positive-definite Xi satisfies the bounds");
    if (est.N(t)(0, 0) < b.N_lower) pass = false;
    if (xi_inv <= b.Xi_inv_lower) pass = false;
  }
  return {true, pass};
}

}  // namespace

ProcedureLog procedure_recursion(const Mat& A0, const Mat& B0,
                                 const ValidatedModel& truth, int n_episodes,
                                 int transitions_per_episode,
                                 std::uint64_t seed) {
  if (n_episodes < 0 || (n_episodes > 0 && transitions_per_episode < 1))
    throw ConfigError("DimensionMismatch",
                      "procedure_recursion needs n_episodes >= 0 and a "
                      "positive transition budget");
  const auto& s = truth.spec();
  const int T = s.T;

  Mat A = A0;
  Mat B = B0;

  const auto est0 = with_dynamics(truth, A, B);
  ProcedureLog log{solver::solve(est0), {}, Mat(), Mat()};
  verify_prop4(est0, log.initial_solution);

  std::vector<Transition> transitions;
  const int runs_per_episode =
      n_episodes > 0 ? (transitions_per_episode + T - 1) / T : 0;

  for (int e = 0; e < n_episodes; ++e) {
    const auto est = with_dynamics(truth, A, B);
    const auto sol = solver::solve(est);
    const auto report = conditions::check_full_horizon(sol);
    const auto [p4_avail, p4_pass] = verify_prop4(est, sol);

    EpisodeEntry entry;
    entry.episode = e;
    entry.A_used = A;
    entry.B_used = B;
    entry.saddle_pass = report.all_pass();
    entry.prop4_available = p4_avail;
    entry.prop4_pass = p4_pass;
    entry.runs = std::size_t(runs_per_episode);

    double theta_G_sum = 0.0;
    for (int i = 0; i < runs_per_episode; ++i) {
      rng::Stream stream(seed, std::uint64_t(e) * 10000 + std::uint64_t(i));
      Vec x = s.x0;
      double G = 0.0;
      for (int t = 0; t < T; ++t) {
        const Vec ubar = sol.gains[t].Du * x + sol.gains[t].du;
        const Vec v = truth.Xi_sqrt(t) * draw(stream, s.du());
        const Vec w = truth.Lambda_sqrt(t) * draw(stream, s.dx());
        const Vec applied = ubar + v;
        G += running_increment(s, t, x, ubar);
        Vec x_next = s.a + s.A * x + s.B * applied + w;
        transitions.push_back({x, applied, x_next});
        x = std::move(x_next);
      }
      G += x.dot(s.M_T * x) + x.dot(s.m_T);
      theta_G_sum += s.theta * G;
    }
    entry.mean_theta_G =
        runs_per_episode > 0 ? theta_G_sum / runs_per_episode : 0.0;

    entry.estimate = estimate_ab(transitions, truth);
    A = entry.estimate.A_hat;
    B = entry.estimate.B_hat;
    log.episodes.push_back(std::move(entry));
  }

  log.A_final = A;
  log.B_final = B;
  return log;
}

io::Table trajectory_table(const ValidatedModel& m,
                           const solver::Solution& sol, std::uint64_t seed) {
  const int T = m.T();
  const int dx = m.dx();
  const int du = m.du();

  const Trajectory ref = run_one(m, sol, Measure::Reference, seed, 0);
  const Trajectory shf = run_one(m, sol, Measure::Shifted, seed, 1);

  auto state_at = [T](const Trajectory& traj, int t) -> const Vec& {
    return t < T ? traj.steps[t].x : traj.x_T;
  };

  io::Table tab;
  auto add = [&tab](std::vector<std::string> names) {
    for (auto& n : names) tab.header.push_back(std::move(n));
  };
  tab.header.push_back("t");
  add(io::flat_names("x_P", dx, 1));
  add(io::flat_names("x_Pstar", dx, 1));
  add(io::flat_names("P", dx, dx));
  add(io::flat_names("p", dx, 1));
  tab.header.push_back("r");
  tab.header.push_back("V");
  add(io::flat_names("u_star", du, 1));
  add(io::flat_names("gamma_star", dx, 1));
  add(io::flat_names("eta_star", du, 1));
  add(io::flat_names("B1", du, du));
  add(io::flat_names("B2", dx, dx));
  add(io::flat_names("B3", du, du));
  add(io::flat_names("C", du, dx));
  tab.header.push_back("det_negH");

  const std::size_t n_controls = std::size_t(du + dx + du);
  const std::size_t n_fraktur =
      std::size_t(du * du + dx * dx + du * du + du * dx) + 1;

  for (int t = 0; t <= T; ++t) {
    std::vector<std::string> row;
    row.push_back(std::to_string(t));
    auto cells = [&row](std::vector<std::string> v) {
      for (auto& c : v) row.push_back(std::move(c));
    };
    const Vec& xs = state_at(shf, t);
    cells(io::flat_values(state_at(ref, t), true));
    cells(io::flat_values(xs, true));
    cells(io::flat_values(sol.value[t].P, true));
    cells(io::flat_values(sol.value[t].p, true));
    row.push_back(io::format_fixed(sol.value[t].r));
    row.push_back(io::format_fixed(solver::value_at(sol, t, xs)));
    if (t < T) {
      cells(io::flat_values(Vec(sol.gains[t].Du * xs + sol.gains[t].du), true));
      cells(io::flat_values(Vec(sol.gains[t].Dg * xs + sol.gains[t].dg), true));
      cells(io::flat_values(Vec(sol.gains[t].Deta * xs + sol.gains[t].deta),
                            true));
    } else {
      row.insert(row.end(), n_controls, std::string());
    }
    if (t >= 1) {
      const auto& f = sol.fraktur[t - 1];
      cells(io::flat_values(f.B1, true));
      cells(io::flat_values(f.B2, true));
      cells(io::flat_values(f.B3, true));
      cells(io::flat_values(f.C, true));
      row.push_back(
          io::format_fixed(conditions::check_assumption1(f).det_negH));
    } else {
      row.insert(row.end(), n_fraktur, std::string());
    }
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

}  // namespace leqg::simulate
