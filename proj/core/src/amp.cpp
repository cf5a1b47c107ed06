#include "sstr/amp.hpp"

#include <algorithm>
#include <cmath>

#include "sstr/errors.hpp"

namespace sstr::amp {
namespace {

void check_denoise_args(double tau2, double signal_var, double lambda, int M) {
  if (!(tau2 > 0.0)) throw OutOfRange("tau2", "effective noise variance must be > 0");
  if (!(signal_var >= 0.0)) throw OutOfRange("signal_var", "must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw OutOfRange("lambda", "must lie in [0, 1]");
  if (M < 1) throw OutOfRange("M", "need at least one antenna");
}

/// Stable logistic: 1 / (1 + exp(z)) without overflow for large |z|.
double logistic_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

RowStats denoise_stats(double r_sq_norm, double tau2, double signal_var, double lambda, int M) {
  check_denoise_args(tau2, signal_var, lambda, M);
  if (!(r_sq_norm >= 0.0)) throw OutOfRange("r_sq_norm", "must be >= 0");
  if (lambda == 0.0 || signal_var == 0.0) return {0.0, 0.0, 0.0};
  const double beta = signal_var / (signal_var + tau2);
  if (lambda == 1.0) return {beta, 1.0, beta};
  // Activity log-odds against the row: M log((s+tau2)/tau2) + log((1-lam)/lam)
  // minus the energy term a ||r||^2 with a = s / (tau2 (s + tau2)).
  const double a = signal_var / (tau2 * (signal_var + tau2));
  const double log_odds_against = static_cast<double>(M) * std::log1p(signal_var / tau2) +
                                  std::log((1.0 - lambda) / lambda) - a * r_sq_norm;
  const double phi = logistic_neg(log_odds_against);
  const double divergence =
      beta * (phi + a * phi * (1.0 - phi) * r_sq_norm / static_cast<double>(M));
  return {beta * phi, phi, divergence};
}

RowDenoise denoise(const Eigen::VectorXcd& r, double tau2, int L, double gamma, double lambda) {
  if (L < 1) throw OutOfRange("L", "pilot length must be >= 1");
  if (!(gamma > 0.0)) throw OutOfRange("gamma", "must be > 0");
  const double signal_var = static_cast<double>(L) * gamma;
  const RowStats stats =
      denoise_stats(r.squaredNorm(), tau2, signal_var, lambda, static_cast<int>(r.size()));
  return {stats.scale * r, stats.posterior, stats.divergence};
}

std::vector<double> state_evolution(const SystemConfig& config, int L, double epsilon) {
  validate_config(config);
  if (L < 1) throw OutOfRange("L", "pilot length must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
  const double lambda = config.p_a * epsilon;
  const double signal_var = static_cast<double>(L) * config.gamma;
  const double undersampling = static_cast<double>(config.N) / static_cast<double>(L);
  const int M = config.M;

  std::vector<double> tau2(static_cast<std::size_t>(config.amp_iters) + 1);
  tau2[0] = config.sigma2 + undersampling * lambda * signal_var;

  RngStream rng(config.seed, kStateEvolutionStream);
  Eigen::VectorXcd x(M), noise(M);
  for (int t = 0; t < config.amp_iters; ++t) {
    const double tau2_t = tau2[static_cast<std::size_t>(t)];
    const double tau = std::sqrt(tau2_t);
    double err_sum = 0.0;
    for (int s = 0; s < config.se_samples; ++s) {
      // One draw feeds both prior branches: conditioning on the activity bit
      // analytically removes its contribution to the estimator variance.
      for (int m = 0; m < M; ++m) x(m) = rng.cgaussian(signal_var);
      for (int m = 0; m < M; ++m) noise(m) = tau * rng.cgaussian(1.0);
      const double idle_energy = noise.squaredNorm();
      const RowStats idle = denoise_stats(idle_energy, tau2_t, signal_var, lambda, M);
      const double err_idle = idle.scale * idle.scale * idle_energy;
      const Eigen::VectorXcd observed = x + noise;
      const RowStats active =
          denoise_stats(observed.squaredNorm(), tau2_t, signal_var, lambda, M);
      const double err_active = (active.scale * observed - x).squaredNorm();
      err_sum += lambda * err_active + (1.0 - lambda) * err_idle;
    }
    const double mmse = err_sum / static_cast<double>(config.se_samples) / static_cast<double>(M);
    tau2[static_cast<std::size_t>(t) + 1] = config.sigma2 + undersampling * mmse;
  }
  return tau2;
}

ActivityVector decide_activity(const Eigen::VectorXd& posterior, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw OutOfRange("threshold", "must lie in (0, 1]");
  ActivityVector detected(static_cast<std::size_t>(posterior.size()));
  for (Eigen::Index n = 0; n < posterior.size(); ++n)
    detected[static_cast<std::size_t>(n)] = posterior(n) >= threshold ? 1 : 0;
  return detected;
}

AmpEstimate run(const Eigen::MatrixXcd& y, const PilotBook& pilots, const SystemConfig& config,
                double epsilon, const std::vector<double>& gains,
                const std::vector<double>* tau2_schedule) {
  validate_config(config);
  const int L = static_cast<int>(pilots.rows());
  const int N = static_cast<int>(pilots.cols());
  const int M = config.M;
  if (N != config.N) throw ShapeMismatch("pilot book column count must equal config.N");
  if (y.rows() != L || y.cols() != M)
    throw ShapeMismatch("pilot observation must be pilot-length x antennas");
  if (static_cast<int>(gains.size()) != N) throw ShapeMismatch("need one gain per user");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
  if (tau2_schedule && static_cast<int>(tau2_schedule->size()) != config.amp_iters + 1)
    throw ShapeMismatch("tau2 schedule must have amp_iters + 1 entries");

  const double lambda = config.p_a * epsilon;
  const double signal_var = static_cast<double>(L) * config.gamma;
  const double undersampling = static_cast<double>(N) / static_cast<double>(L);

  std::vector<double> schedule;
  if (!config.amp_empirical_tau) {
    if (tau2_schedule)
      schedule = *tau2_schedule;
    else
      schedule = state_evolution(config, L, epsilon);
  }

  AmpEstimate est;
  est.tau2.assign(static_cast<std::size_t>(config.amp_iters) + 1, 0.0);

  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(N, M);
  Eigen::MatrixXcd residual = y;
  Eigen::MatrixXcd effective(N, M);
  Eigen::MatrixXcd x_next(N, M), residual_next(L, M);
  Eigen::VectorXd scales(N);
  est.posterior.resize(N);
  const double norm = static_cast<double>(L) * static_cast<double>(M);
  double measured = y.squaredNorm() / norm;
  for (int t = 0; t < config.amp_iters; ++t) {
    // The analytic schedule calibrates the denoiser in the large-system limit.
    // On finite instances the true residual can exceed it; flooring the
    // effective variance at the measured energy keeps the activity threshold
    // honest and prevents a false-alarm cascade.
    const double tau2_t = config.amp_empirical_tau
                              ? measured
                              : std::max(schedule[static_cast<std::size_t>(t)], measured);
    est.tau2[static_cast<std::size_t>(t)] = tau2_t;
    effective.noalias() = pilots.adjoint() * residual;
    effective += x;
    const Eigen::VectorXd row_energy = effective.rowwise().squaredNorm();
    double divergence_sum = 0.0;
    for (int n = 0; n < N; ++n) {
      const RowStats stats = denoise_stats(row_energy(n), tau2_t, signal_var, lambda, M);
      scales(n) = stats.scale;
      est.posterior(n) = stats.posterior;
      divergence_sum += stats.divergence;
    }
    // A residual that grows marks the iteration as unstable (the Onsager
    // multiplier has crossed 1); retry the step with geometric damping until
    // the energy is non-increasing, leaving well-behaved steps untouched.
    double theta = 1.0;
    for (int attempt = 0;; ++attempt) {
      x_next = theta * (scales.asDiagonal() * effective).eval() + (1.0 - theta) * x;
      const double onsager = undersampling * theta * divergence_sum / static_cast<double>(N);
      residual_next = onsager * residual + y;
      residual_next.noalias() -= pilots * x_next;
      const double measured_next = residual_next.squaredNorm() / norm;
      if (measured_next <= measured || attempt >= 5) {
        measured = measured_next;
        break;
      }
      theta *= 0.5;
    }
    x.swap(x_next);
    residual.swap(residual_next);
  }
  est.tau2[static_cast<std::size_t>(config.amp_iters)] = measured;
  est.x_hat = std::move(x);

  est.detected = decide_activity(est.posterior, config.amp_threshold);
  const std::vector<double> rho = power_control(gains, config.gamma);
  for (int n = 0; n < N; ++n)
    if (est.detected[static_cast<std::size_t>(n)]) est.detected_index.push_back(n);
  est.h_hat.resize(M, static_cast<Eigen::Index>(est.detected_index.size()));
  for (std::size_t j = 0; j < est.detected_index.size(); ++j) {
    const int n = est.detected_index[j];
    const double rescale =
        1.0 / std::sqrt(static_cast<double>(L) * rho[static_cast<std::size_t>(n)]);
    est.h_hat.col(static_cast<Eigen::Index>(j)) = rescale * est.x_hat.row(n).transpose();
  }
  return est;
}

}  // namespace sstr::amp
