#include "sstr/simulator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <utility>

#include "sstr/errors.hpp"
#include "sstr/parallel.hpp"

namespace sstr::sim {
namespace {

constexpr double kZfConditionLimit = 1e10;

void check_psk_order(int W) {
  if (W != 2 && W != 4) throw OutOfRange("W", "PSK order must be 2 or 4");
}

}  // namespace

std::complex<double> psk_point(int s, int W) {
  check_psk_order(W);
  if (s < 0 || s >= W) throw OutOfRange("s", "symbol index must lie in [0, W)");
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(W);
  return {std::cos(angle), std::sin(angle)};
}

Eigen::MatrixXi detect_symbols(const Eigen::MatrixXcd& equalized, int W) {
  check_psk_order(W);
  std::vector<std::complex<double>> points(static_cast<std::size_t>(W));
  for (int s = 0; s < W; ++s) points[static_cast<std::size_t>(s)] = psk_point(s, W);
  Eigen::MatrixXi decisions(equalized.rows(), equalized.cols());
  for (Eigen::Index c = 0; c < equalized.cols(); ++c) {
    for (Eigen::Index r = 0; r < equalized.rows(); ++r) {
      const std::complex<double> z = equalized(r, c);
      // Nearest unit-modulus point maximizes Re(z * conj(point)); strict
      // improvement keeps the lowest symbol index on ties.
      int best = 0;
      double best_metric = (z * std::conj(points[0])).real();
      for (int s = 1; s < W; ++s) {
        const double metric = (z * std::conj(points[static_cast<std::size_t>(s)])).real();
        if (metric > best_metric) {
          best_metric = metric;
          best = s;
        }
      }
      decisions(r, c) = best;
    }
  }
  return decisions;
}

Eigen::MatrixXcd mrc_filters(const Eigen::MatrixXcd& h_hat) { return h_hat; }

Eigen::MatrixXcd zf_filters(const Eigen::MatrixXcd& h_hat) {
  const Eigen::Index M = h_hat.rows();
  const Eigen::Index K = h_hat.cols();
  if (K == 0) return Eigen::MatrixXcd(M, 0);
  if (K > M) throw ZfUnavailable("more detected users than antennas");
  const Eigen::MatrixXcd gram = h_hat.adjoint() * h_hat;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues()(0);
  const double lambda_max = eig.eigenvalues()(K - 1);
  if (!(lambda_min > 0.0) || lambda_max > kZfConditionLimit * lambda_min)
    throw ZfUnavailable("channel-estimate Gram matrix is ill-conditioned");
  // H (H^H H)^{-1}: the Gram inverse is Hermitian, so solve against H^H and
  // take the adjoint of the result.
  return gram.llt().solve(h_hat.adjoint()).adjoint();
}

DataPhase data_phase(const ChannelSet& channels, const std::vector<int>& active_index,
                     const std::vector<double>& rho, int payload_len, int W, double sigma2,
                     RngStream& rng) {
  check_psk_order(W);
  if (payload_len < 1) throw OutOfRange("payload_len", "need at least one payload slot");
  if (!(sigma2 > 0.0)) throw OutOfRange("sigma2", "must be > 0");
  if (rho.size() != static_cast<std::size_t>(channels.h.cols()))
    throw ShapeMismatch("need one transmit power per user");
  const Eigen::Index M = channels.h.rows();
  const int K = static_cast<int>(active_index.size());

  DataPhase out;
  out.symbols.resize(K, payload_len);
  Eigen::MatrixXcd transmit(K, payload_len);
  for (int j = 0; j < K; ++j) {
    const int n = active_index[static_cast<std::size_t>(j)];
    if (n < 0 || n >= static_cast<int>(channels.h.cols()))
      throw OutOfRange("active_index", "user index outside the channel set");
    const double amplitude = std::sqrt(rho[static_cast<std::size_t>(n)]);
    for (int t = 0; t < payload_len; ++t) {
      const int s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(W)));
      out.symbols(j, t) = s;
      transmit(j, t) = amplitude * psk_point(s, W);
    }
  }

  out.y.resize(M, payload_len);
  if (K > 0) {
    Eigen::MatrixXcd h_active(M, K);
    for (int j = 0; j < K; ++j) h_active.col(j) = channels.h.col(active_index[static_cast<std::size_t>(j)]);
    out.y.noalias() = h_active * transmit;
  } else {
    out.y.setZero();
  }
  for (Eigen::Index t = 0; t < payload_len; ++t)
    for (Eigen::Index m = 0; m < M; ++m) out.y(m, t) += rng.cgaussian(sigma2);
  return out;
}

TrialResult run_trial(const SystemConfig& config, int L, double epsilon, RngStream& rng,
                      const TrialOptions& options) {
  validate_config(config);
  if (L < 1 || L > config.T - 1)
    throw OutOfRange("L", "pilot length must leave at least one payload slot");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
  if (options.condition_k > config.N)
    throw OutOfRange("condition_k", "cannot exceed the user count");
  const int N = config.N;
  const int payload_len = config.T - L;

  std::vector<double> unit_gains;
  if (!options.gains) unit_gains.assign(static_cast<std::size_t>(N), 1.0);
  const std::vector<double>& gains = options.gains ? *options.gains : unit_gains;
  if (gains.size() != static_cast<std::size_t>(N)) throw ShapeMismatch("need one gain per user");
  const std::vector<double> rho = power_control(gains, config.gamma);

  const ActivityVector activity =
      options.condition_k >= 0 ? draw_activity_conditioned(rng, N, options.condition_k)
                               : draw_activity(rng, N, config.p_a, epsilon);
  std::vector<int> active_index;
  for (int n = 0; n < N; ++n)
    if (activity[static_cast<std::size_t>(n)]) active_index.push_back(n);

  TrialResult result;
  result.active = static_cast<int>(active_index.size());
  result.symbol_total = static_cast<std::int64_t>(result.active) * payload_len;
  // With as many active users as pilot slots the pilot phase cannot separate
  // them; the block is declared unresolvable and delivers nothing.
  if (result.active >= L) return result;

  const PilotBook local_pilots =
      options.fixed_pilots ? PilotBook() : draw_pilots(rng, L, N);
  const PilotBook& pilots = options.fixed_pilots ? *options.fixed_pilots : local_pilots;
  if (pilots.rows() != L || pilots.cols() != N)
    throw ShapeMismatch("pilot book must be pilot-length x users");
  const ChannelSet channels = draw_channels(rng, config.M, gains);

  // Pilot-phase observation: user n contributes sqrt(L rho_n) pilot_n h_n^T,
  // i.e. per-symbol transmit power rho_n over the unit-energy pilot column.
  Eigen::MatrixXcd y_pilot(L, config.M);
  {
    const int K = result.active;
    Eigen::MatrixXcd pilot_cols(L, K);
    Eigen::MatrixXcd signal_rows(K, config.M);
    for (int j = 0; j < K; ++j) {
      const int n = active_index[static_cast<std::size_t>(j)];
      pilot_cols.col(j) = pilots.col(n);
      signal_rows.row(j) =
          std::sqrt(static_cast<double>(L) * rho[static_cast<std::size_t>(n)]) *
          channels.h.col(n).transpose();
    }
    y_pilot.noalias() = pilot_cols * signal_rows;
    for (Eigen::Index m = 0; m < config.M; ++m)
      for (Eigen::Index l = 0; l < L; ++l) y_pilot(l, m) += rng.cgaussian(config.sigma2);
  }

  const amp::AmpEstimate est = amp::run(y_pilot, pilots, config, epsilon, gains, options.tau2);
  result.detected = static_cast<int>(est.detected_index.size());
  result.tau2_final = est.tau2.back();

  std::vector<int> detected_row(static_cast<std::size_t>(N), -1);
  for (int j = 0; j < result.detected; ++j)
    detected_row[static_cast<std::size_t>(est.detected_index[static_cast<std::size_t>(j)])] = j;
  for (const int n : active_index)
    if (detected_row[static_cast<std::size_t>(n)] >= 0) ++result.hits;

  const DataPhase data =
      data_phase(channels, active_index, rho, payload_len, config.W, config.sigma2, rng);

  Eigen::MatrixXcd filters;
  try {
    filters = options.beamformer == Beamformer::kZf ? zf_filters(est.h_hat)
                                                    : mrc_filters(est.h_hat);
  } catch (const ZfUnavailable&) {
    return result;  // detection counts stand; every payload symbol failed
  }
  const Eigen::MatrixXcd equalized = filters.adjoint() * data.y;
  const Eigen::MatrixXi decisions = detect_symbols(equalized, config.W);

  for (int a = 0; a < result.active; ++a) {
    const int row = detected_row[static_cast<std::size_t>(active_index[static_cast<std::size_t>(a)])];
    if (row < 0) continue;
    for (int t = 0; t < payload_len; ++t)
      if (decisions(row, t) == data.symbols(a, t)) ++result.symbol_ok;
  }
  return result;
}

TrialBatch run_trials(const SystemConfig& config, int L, double epsilon, int trials,
                      const TrialOptions& options, int threads) {
  validate_config(config);
  if (trials < 1) throw OutOfRange("trials", "need at least one trial");

  // All trials share (L, epsilon), so the effective-noise schedule can be
  // computed once instead of per block.
  TrialOptions shared = options;
  std::vector<double> schedule;
  if (!shared.tau2 && !config.amp_empirical_tau) {
    schedule = amp::state_evolution(config, L, epsilon);
    shared.tau2 = &schedule;
  }

  TrialBatch batch;
  batch.L = L;
  batch.epsilon = epsilon;
  batch.results.resize(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t index) {
    RngStream rng(config.seed, kTrialStreamBase + index);
    batch.results[index] = run_trial(config, L, epsilon, rng, shared);
  });
  return batch;
}

SstrPoint empirical_sstr(const TrialBatch& batch, const SystemConfig& config) {
  const std::size_t n = batch.results.size();
  if (n < 2) throw InsufficientTrials("need at least two trials for a confidence interval");
  if (batch.L < 1 || batch.L > config.T - 1)
    throw OutOfRange("L", "pilot length must leave at least one payload slot");

  // Per block: (T-L)/T * delivered / (T-L) = delivered / T symbols per slot.
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const TrialResult& r : batch.results) {
    const double v = static_cast<double>(r.symbol_ok) / static_cast<double>(config.T);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double var =
      std::max(0.0, (sum_sq - sum * mean) / (static_cast<double>(n) - 1.0));
  SstrPoint point;
  point.L = batch.L;
  point.epsilon = batch.epsilon;
  point.method = SstrMethod::kMonteCarlo;
  point.value = mean;
  point.half_width = 1.96 * std::sqrt(var / static_cast<double>(n));
  return point;
}

SstrPoint empirical_user_rate(const TrialBatch& batch, const SystemConfig& config) {
  const std::size_t n = batch.results.size();
  if (n < 2) throw InsufficientTrials("need at least two trials for a confidence interval");
  if (batch.L < 1 || batch.L > config.T - 1)
    throw OutOfRange("L", "pilot length must leave at least one payload slot");
  const double prefactor =
      static_cast<double>(config.T - batch.L) / static_cast<double>(config.T);

  double sum = 0.0;
  double sum_sq = 0.0;
  for (const TrialResult& r : batch.results) {
    const double v = r.symbol_total > 0 ? prefactor * static_cast<double>(r.symbol_ok) /
                                              static_cast<double>(r.symbol_total)
                                        : 0.0;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double var =
      std::max(0.0, (sum_sq - sum * mean) / (static_cast<double>(n) - 1.0));
  SstrPoint point;
  point.L = batch.L;
  point.epsilon = batch.epsilon;
  point.method = SstrMethod::kMonteCarlo;
  point.value = mean;
  point.half_width = 1.96 * std::sqrt(var / static_cast<double>(n));
  return point;
}

DetectionStats detection_stats(const TrialBatch& batch, const SystemConfig& config) {
  std::int64_t active = 0, hits = 0, detected = 0, ok = 0;
  std::int64_t payload = 0;
  for (const TrialResult& r : batch.results) {
    active += r.active;
    hits += r.hits;
    detected += r.detected;
    ok += r.symbol_ok;
    payload += static_cast<std::int64_t>(r.hits) * (config.T - batch.L);
  }
  const std::int64_t idle =
      static_cast<std::int64_t>(config.N) * static_cast<std::int64_t>(batch.results.size()) -
      active;
  DetectionStats stats;
  if (active > 0) stats.miss_rate = 1.0 - static_cast<double>(hits) / static_cast<double>(active);
  if (idle > 0)
    stats.false_alarm_rate = static_cast<double>(detected - hits) / static_cast<double>(idle);
  if (payload > 0)
    stats.ser_given_detected = 1.0 - static_cast<double>(ok) / static_cast<double>(payload);
  return stats;
}

}  // namespace sstr::sim
