#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "sstr/amp.hpp"
#include "sstr/analytic.hpp"
#include "sstr/model.hpp"
#include "sstr/rng.hpp"

namespace sstr::sim {

/// Constellation point for symbol index `s` of a W-ary phase alphabet, unit
/// modulus: exp(i 2 pi s / W).
std::complex<double> psk_point(int s, int W);

/// Nearest-constellation decision per received scalar, one row per detected
/// user and one column per payload slot. Ties resolve to the lowest index.
Eigen::MatrixXi detect_symbols(const Eigen::MatrixXcd& equalized, int W);

/// Linear receive filters for the detected users, built from estimated
/// channels (antennas x detected). Maximum-ratio returns the estimates
/// themselves; the interference-suppressing variant solves the Gram system
/// and refuses ill-posed cases (more detected users than antennas, or a Gram
/// condition estimate beyond 1e10) by throwing ZfUnavailable.
Eigen::MatrixXcd mrc_filters(const Eigen::MatrixXcd& h_hat);
Eigen::MatrixXcd zf_filters(const Eigen::MatrixXcd& h_hat);

struct DataPhase {
  Eigen::MatrixXcd y;       ///< antennas x payload-slot observations
  Eigen::MatrixXi symbols;  ///< active-user x payload-slot transmitted indices
};

/// Synthesizes the payload observations for the active users listed in
/// `active_index`: independent uniform W-ary symbols at transmit scale
/// sqrt(rho_n), propagated through the true channels, plus complex Gaussian
/// noise of variance sigma2 per antenna and slot.
DataPhase data_phase(const ChannelSet& channels, const std::vector<int>& active_index,
                     const std::vector<double>& rho, int payload_len, int W, double sigma2,
                     RngStream& rng);

struct TrialResult {
  int active = 0;            ///< realized number of active users
  int detected = 0;          ///< rows the activity detector kept
  int hits = 0;              ///< active users that were detected
  std::int64_t symbol_ok = 0;  ///< payload symbols delivered end to end
  std::int64_t symbol_total = 0;  ///< payload symbols sent by active users
  double tau2_final = 0.0;   ///< last effective-noise variance of the detector
};

struct TrialOptions {
  Beamformer beamformer = Beamformer::kMrc;
  /// When >= 0, the trial conditions on exactly this many active users.
  int condition_k = -1;
  /// Optional shared pilot book (pilot-length x N); drawn fresh when absent.
  const PilotBook* fixed_pilots = nullptr;
  /// Optional precomputed effective-noise schedule (amp_iters + 1 entries).
  const std::vector<double>* tau2 = nullptr;
  /// Optional fixed large-scale gains; unit gains when absent.
  const std::vector<double>* gains = nullptr;
};

/// One end-to-end coherence block: activity draw, pilot-phase detection,
/// channel estimation, payload equalization, and symbol decisions. `L` is the
/// pilot length; payload length is T - L. When at least `L` users are active
/// the pilot phase is declared unresolvable and every payload symbol of the
/// block counts as failed. A filter-construction failure (ZfUnavailable)
/// likewise fails the block's symbols while keeping the detection counts.
TrialResult run_trial(const SystemConfig& config, int L, double epsilon, RngStream& rng,
                      const TrialOptions& options = {});

struct TrialBatch {
  std::vector<TrialResult> results;
  int L = 0;
  double epsilon = 0.0;
};

/// Runs `trials` independent blocks, each on its own deterministic stream
/// derived from config.seed, optionally across `threads` workers. Results are
/// index-ordered regardless of scheduling.
TrialBatch run_trials(const SystemConfig& config, int L, double epsilon, int trials,
                      const TrialOptions& options = {}, int threads = 1);

/// Per-block delivered-symbol average scaled by (T - L) / T per payload slot,
/// i.e. the empirical rate in symbols per slot, with a normal-approximation
/// 95% half-width. Throws InsufficientTrials below two blocks.
SstrPoint empirical_sstr(const TrialBatch& batch, const SystemConfig& config);

/// Per-user success rate: mean over blocks of (T - L)/T * delivered/sent
/// (a block with no active user contributes 0), with a 95% half-width. The
/// natural summary for batches conditioned on a fixed active count. Throws
/// InsufficientTrials below two blocks.
SstrPoint empirical_user_rate(const TrialBatch& batch, const SystemConfig& config);

struct DetectionStats {
  double miss_rate = 0.0;         ///< active users the detector dropped
  double false_alarm_rate = 0.0;  ///< idle users the detector kept
  /// Symbol error rate restricted to active users that were detected.
  double ser_given_detected = 0.0;
};

/// Aggregate detection and residual-error rates over a batch.
DetectionStats detection_stats(const TrialBatch& batch, const SystemConfig& config);

}  // namespace sstr::sim
