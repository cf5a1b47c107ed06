#pragma once

#include <vector>

#include "sstr/model.hpp"

namespace sstr::amp {

/// Output of the iterative pilot-domain joint activity detector and channel
/// estimator. Rows of x_hat estimate the pilot-scaled effective signals
/// sqrt(L rho_n) alpha_n h_n; posterior[n] is the posterior probability that
/// user n is active; tau2 is the per-iteration effective noise variance
/// schedule actually used (length amp_iters + 1, all entries > 0);
/// detected[n] = 1 iff posterior[n] >= threshold; h_hat holds the rescaled
/// channel estimates of the detected users only, column j belonging to user
/// detected_index[j].
struct AmpEstimate {
  Eigen::MatrixXcd x_hat;          ///< N x M
  Eigen::VectorXd posterior;       ///< length N, entries in [0, 1]
  std::vector<double> tau2;        ///< per-iteration effective noise variances
  ActivityVector detected;         ///< length N
  std::vector<int> detected_index; ///< users with detected = 1, ascending
  Eigen::MatrixXcd h_hat;          ///< M x detected_index.size()
};

/// Row posterior statistics of the minimum-mean-square-error denoiser for the
/// two-hypothesis row prior (inactive: zero row; active w.p. lambda: CN(0,
/// signal_var * I_M)） observed as r = x + CN(0, tau2 * I_M).
///   scale      multiplier of r giving the posterior mean,
///              beta * phi with beta = signal_var / (signal_var + tau2),
///   posterior  activity probability phi, computed in log space,
///   divergence normalized Jacobian trace (1/M) sum_i d eta_i / d r_i, used
///              by the iteration's correction term.
struct RowStats {
  double scale = 0.0;
  double posterior = 0.0;
  double divergence = 0.0;
};

/// Denoiser statistics from a row's squared norm. lambda in [0, 1]; the
/// endpoints degenerate to the all-zero and linear-MMSE denoisers.
RowStats denoise_stats(double r_sq_norm, double tau2, double signal_var, double lambda, int M);

/// Full denoiser for one row: posterior mean x_hat = scale * r plus the
/// posterior and divergence. signal_var is the per-component prior variance
/// of an active row, i.e. L * gamma under statistical channel inversion.
struct RowDenoise {
  Eigen::VectorXcd x_hat;
  double posterior = 0.0;
  double divergence = 0.0;
};
RowDenoise denoise(const Eigen::VectorXcd& r, double tau2, int L, double gamma, double lambda);

/// Deterministic effective-noise schedule tau2[0 .. amp_iters]:
///   tau2[0] = sigma2 + (N/L) lambda L gamma,
///   tau2[t+1] = sigma2 + (N/L) (1/M) E || eta_t(x + tau_t v) - x ||^2,
/// the expectation estimated with config.se_samples Monte-Carlo draws from a
/// dedicated stream of config.seed, so the schedule is a pure function of
/// (config, L, epsilon).
std::vector<double> state_evolution(const SystemConfig& config, int L, double epsilon);

/// Thresholds posteriors into an activity decision (>= threshold detects).
ActivityVector decide_activity(const Eigen::VectorXd& posterior, double threshold);

/// Runs the iterative detector on a pilot-phase observation y (L x M) with
/// the given pilot book (L x N). Per-user gains rescale detected rows into
/// channel estimates h_hat = x_hat_n / sqrt(L rho_n) with rho_n =
/// gamma / gains[n]. The effective-noise schedule comes from
/// state_evolution, or from the running residual energy ||R||^2/(L M) when
/// config.amp_empirical_tau is set; a precomputed schedule can be supplied to
/// amortize state evolution across trials.
AmpEstimate run(const Eigen::MatrixXcd& y, const PilotBook& pilots, const SystemConfig& config,
                double epsilon, const std::vector<double>& gains,
                const std::vector<double>* tau2_schedule = nullptr);

}  // namespace sstr::amp
