#include "leqg/duality.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "leqg/detail/moments.hpp"
#include "leqg/errors.hpp"
#include "leqg/rng.hpp"

namespace leqg::duality {

MeasureShift MeasureShift::zeros(int T, int dx, int du) {
  MeasureShift s;
  s.gamma.assign(T, Vec::Zero(dx));
  s.eta.assign(T, Vec::Zero(du));
  return s;
}

namespace {

void require_schedule(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw ConfigError("DimensionMismatch",
                      std::string(what) + " schedule has " +
                          std::to_string(got) + " entries, expected " +
                          std::to_string(want));
}

}  // namespace

double relative_entropy(const MeasureShift& shift, const ValidatedModel& m) {
  const int T = m.T();
  require_schedule(shift.gamma.size(), T, "gamma");
  require_schedule(shift.eta.size(), T, "eta");
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    total += 0.5 * shift.gamma[t].dot(m.Lambda_inv(t) * shift.gamma[t]);
    total += 0.5 * shift.eta[t].dot(m.Xi_inv(t) * shift.eta[t]);
  }
  return total;
}

double log_rn_derivative(const MeasureShift& shift,
                         const NoiseRealization& noise,
                         const ValidatedModel& m) {
  const int T = m.T();
  require_schedule(shift.gamma.size(), T, "gamma");
  require_schedule(shift.eta.size(), T, "eta");
  require_schedule(noise.w.size(), T, "w");
  require_schedule(noise.v.size(), T, "v");
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec lg = m.Lambda_inv(t) * shift.gamma[t];
    const Vec xe = m.Xi_inv(t) * shift.eta[t];
    total += lg.dot(noise.w[t]) - 0.5 * lg.dot(shift.gamma[t]);
    total += xe.dot(noise.v[t]) - 0.5 * xe.dot(shift.eta[t]);
  }
  return total;
}

double cost_G(const std::vector<Vec>& states, const std::vector<Vec>& ubars,
              const std::vector<Vec>& eta, const ValidatedModel& m) {
  const auto& s = m.spec();
  const int T = s.T;
  require_schedule(states.size(), T + 1, "state");
  require_schedule(ubars.size(), T, "control");
  if (!eta.empty()) require_schedule(eta.size(), T, "eta");

  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec& x = states[t];
    const Vec ue = eta.empty() ? ubars[t] : Vec(ubars[t] + eta[t]);
    total += x.dot(s.M * x) + (s.Xi[t] * s.N[t]).trace();
    total += ue.dot(s.N[t] * ue) + ue.dot(s.Q * x);
    total += s.m.dot(x) + s.n.dot(ue);
  }
  const Vec& xT = states[T];
  total += xT.dot(s.M_T * xT) + xT.dot(s.m_T);
  return total;
}

namespace {

// theta * cost_G along one reference-measure path, with feedback controls and
// noise drawn from substream (seed, index).
double sample_theta_G(const ValidatedModel& m,
                      const std::vector<GainSet>& gains, std::uint64_t seed,
                      std::uint64_t index) {
  const auto& s = m.spec();
  const int T = s.T;
  const int dx = s.dx();
  const int du = s.du();
  rng::Stream stream(seed, index);

  Vec x = s.x0;
  Vec z_w(dx), z_v(du);
  double G = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec ubar = gains[t].Du * x + gains[t].du;
    for (int i = 0; i < du; ++i) z_v(i) = stream.normal();
    for (int i = 0; i < dx; ++i) z_w(i) = stream.normal();
    const Vec v = m.Xi_sqrt(t) * z_v;
    const Vec w = m.Lambda_sqrt(t) * z_w;

    G += x.dot(s.M * x) + (s.Xi[t] * s.N[t]).trace();
    G += ubar.dot(s.N[t] * ubar) + ubar.dot(s.Q * x);
    G += s.m.dot(x) + s.n.dot(ubar);

    x = s.a + s.A * x + s.B * (ubar + v) + w;
  }
  G += x.dot(s.M_T * x) + x.dot(s.m_T);
  return s.theta * G;
}

}  // namespace

McResult free_energy_mc(const ValidatedModel& m,
                        const std::vector<GainSet>& gains,
                        std::size_t samples, std::uint64_t seed) {
  if (samples < 1000)
    throw ConfigError("DimensionMismatch",
                      "free_energy_mc needs at least 1000 samples, got " +
                          std::to_string(samples));
  require_schedule(gains.size(), m.T(), "gain");

  std::vector<double> psi(samples);
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      samples >= 16384 ? std::min<std::size_t>(hw, 8) : 1;
  if (workers == 1) {
    for (std::size_t i = 0; i < samples; ++i)
      psi[i] = sample_theta_G(m, gains, seed, i);
  } else {
    std::vector<std::future<void>> jobs;
    const std::size_t chunk = (samples + workers - 1) / workers;
    for (std::size_t wkr = 0; wkr < workers; ++wkr) {
      const std::size_t lo = wkr * chunk;
      const std::size_t hi = std::min(samples, lo + chunk);
      if (lo >= hi) break;
      jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i)
          psi[i] = sample_theta_G(m, gains, seed, i);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  const double shift = *std::max_element(psi.begin(), psi.end());
  if (!std::isfinite(shift))
    throw NumericalError("DegenerateSample",
                         "non-finite exponent in free-energy sample");
  std::vector<double> weights(samples);
  for (std::size_t i = 0; i < samples; ++i)
    weights[i] = std::exp(psi[i] - shift);
  const double mean_w = rng::pairwise_mean(weights);
  if (!(mean_w > 0.0))
    throw NumericalError("DegenerateSample",
                         "all exponential weights underflow");

  double ssq = 0.0;
  for (double w : weights) ssq += (w - mean_w) * (w - mean_w);
  const double sd =
      samples > 1 ? std::sqrt(ssq / double(samples - 1)) : 0.0;

  McResult out;
  out.estimate = shift + std::log(mean_w);
  out.std_error = sd / (mean_w * std::sqrt(double(samples)));
  out.samples = samples;
  out.seed = seed;
  return out;
}

double game_objective(const ValidatedModel& m,
                      const std::vector<GainSet>& gains,
                      const MeasureShift& shift,
                      solver::TerminalConvention convention) {
  const auto& s = m.spec();
  const int T = s.T;
  require_schedule(gains.size(), T, "gain");
  require_schedule(shift.gamma.size(), T, "gamma");
  require_schedule(shift.eta.size(), T, "eta");

  detail::AffinePolicy K;
  K.D.resize(T);
  K.d.resize(T);
  K.E.resize(T);
  K.e.resize(T);
  K.F.resize(T);
  K.f.resize(T);
  for (int t = 0; t < T; ++t) {
    K.D[t] = gains[t].Du;
    K.d[t] = gains[t].du;
    K.E[t] = gains[t].Dg;
    K.e[t] = gains[t].dg + shift.gamma[t];
    K.F[t] = gains[t].Deta;
    K.f[t] = gains[t].deta + shift.eta[t];
  }

  Mat PT;
  Vec pT;
  if (convention == solver::TerminalConvention::Theorem1) {
    PT = s.M_T;
    pT = s.m_T;
  } else {
    PT = 2.0 * s.theta * s.M_T;
    pT = s.theta * s.m_T;
  }
  return detail::propagate_policy_value(m, K, PT, pT, 0.0).value;
}

}  // namespace leqg::duality
