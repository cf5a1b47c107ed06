#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sstr/rng.hpp"

namespace sstr {

/// Static description of one grant-free massive-access cell.
///
/// A frame spans T symbols, of which a pilot block of length L (chosen per
/// experiment, not stored here) is followed by data symbols. N potential
/// users are each active w.p. p_a and admitted w.p. epsilon (also chosen per
/// experiment). The base station has M antennas; every admitted active user
/// is received at power gamma after statistical channel inversion; the
/// per-symbol noise variance is sigma2; data symbols come from a W-ary PSK
/// alphabet. amp_iters / se_samples / amp_threshold / amp_empirical_tau are
/// numerical controls of the activity-detection stage.
struct SystemConfig {
  int N = 0;               ///< number of potential users, >= 1
  int M = 0;               ///< base-station antennas, >= 1
  int T = 0;               ///< frame length in symbols, >= 2
  double p_a = 0.0;        ///< activity probability, in [0, 1]
  double gamma = 10.0;     ///< target receive power (linear), > 0
  double sigma2 = 1.0;     ///< noise variance, > 0
  int W = 4;               ///< PSK order, 2 or 4
  int amp_iters = 20;      ///< activity-detector iterations, >= 1
  int se_samples = 1000;   ///< Monte-Carlo samples per state-evolution step, >= 1
  std::uint64_t seed = 1;  ///< master seed for all derived random streams
  double amp_threshold = 0.5;      ///< posterior activity threshold, in (0, 1]
  bool amp_empirical_tau = false;  ///< estimate effective noise from residuals
};

/// Validates every field range; returns the config unchanged on success and
/// throws OutOfRange naming the offending field otherwise.
SystemConfig validate_config(const SystemConfig& raw);

/// Per-user transmit powers that invert the large-scale gains so each user
/// arrives at power gamma: rho_n = gamma / gains[n]. Gains must be positive.
std::vector<double> power_control(const std::vector<double>& gains, double gamma);

/// 0/1 activity indicators for the N users of one frame.
using ActivityVector = std::vector<std::uint8_t>;

/// Pilot matrix, L x N; user n's pilot is column n with i.i.d. CN(0, 1/L)
/// entries, so pilot columns have unit expected energy.
using PilotBook = Eigen::MatrixXcd;

/// One frame's channel realization: column n of h is user n's M-antenna
/// channel, drawn CN(0, gains[n] * I_M).
struct ChannelSet {
  Eigen::MatrixXcd h;         ///< M x N
  std::vector<double> gains;  ///< large-scale gains gamma_n, length N
};

/// I.i.d. Bernoulli(p_a * epsilon) activity draw.
ActivityVector draw_activity(RngStream& rng, int n_users, double p_a, double epsilon);

/// Activity conditioned on exactly k_active users, uniformly chosen.
ActivityVector draw_activity_conditioned(RngStream& rng, int n_users, int k_active);

/// Fresh pilot book with CN(0, 1/length) entries.
PilotBook draw_pilots(RngStream& rng, int length, int n_users);

/// Fresh channel realization for the given large-scale gains.
ChannelSet draw_channels(RngStream& rng, int n_antennas, const std::vector<double>& gains);

/// Number of ones in an activity vector.
int active_count(const ActivityVector& activity);

}  // namespace sstr
