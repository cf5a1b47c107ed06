#include "sstr/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sstr/errors.hpp"

namespace sstr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void check_load_args(double L, double gamma, double sigma2) {
  if (!(L >= 1.0)) throw OutOfRange("L", "pilot length must be >= 1");
  if (!(gamma > 0.0)) throw OutOfRange("gamma", "must be > 0");
  if (!(sigma2 > 0.0)) throw OutOfRange("sigma2", "must be > 0");
}

/// b - 1 - log(b) for b in (0, 1], series-expanded near b = 1 where the
/// direct form loses all significant digits.
double b_gap(double b) {
  const double e = b - 1.0;
  if (std::abs(e) < 1e-5) return e * e * (0.5 + e * (-1.0 / 3.0 + e * 0.25));
  return e - std::log1p(e);
}

/// Highest load that contributes a nonzero term to the SSTR sum.
int load_cutoff(const SystemConfig& config, int L, Beamformer bf) {
  int cutoff = std::min(config.N, L - 1);
  if (bf == Beamformer::kZf) cutoff = std::min(cutoff, config.M - 1);
  return cutoff;
}

void check_sstr_args(const SystemConfig& config, int L, double epsilon) {
  validate_config(config);
  if (L < 1 || L > config.T - 1) throw OutOfRange("L", "must lie in [1, T-1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
}

}  // namespace

double q_function(double x) {
  return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

double log_binomial_coefficient(int n, int k) {
  if (n < 0) throw OutOfRange("n", "must be >= 0");
  if (k < 0 || k > n) throw OutOfRange("k", "must lie in [0, n]");
  double s = 0.0;
  for (int i = 1; i <= k; ++i)
    s += std::log(static_cast<double>(n - k + i) / static_cast<double>(i));
  return s;
}

double binomial_log_pmf(int n, int k, double lam) {
  if (!(lam >= 0.0 && lam <= 1.0)) throw OutOfRange("lam", "must lie in [0, 1]");
  const double log_coeff = log_binomial_coefficient(n, k);  // validates n, k
  if (lam == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (lam == 1.0) return k == n ? 0.0 : kNegInf;
  return log_coeff + static_cast<double>(k) * std::log(lam) +
         static_cast<double>(n - k) * std::log1p(-lam);
}

double binomial_pmf(int n, int k, double lam) {
  return std::exp(binomial_log_pmf(n, k, lam));
}

double b_factor(double k, double L, double gamma, double sigma2) {
  check_load_args(L, gamma, sigma2);
  if (!(k >= 0.0)) throw OutOfRange("k", "must be >= 0");
  if (!(k < L)) throw OutOfRange("k", "load must be below the pilot length");
  const double x = gamma * (L - k) / sigma2;
  if (x < 1e-4) return 1.0 + x * (-0.5 + x * (1.0 / 3.0 - 0.25 * x));
  return std::log1p(x) / x;
}

double miss_probability(double k, double L, int M, double gamma, double sigma2) {
  check_load_args(L, gamma, sigma2);
  if (M < 1) throw OutOfRange("M", "need at least one antenna");
  if (!(k >= 0.0)) throw OutOfRange("k", "must be >= 0");
  if (k >= L) return 1.0;
  const double b = b_factor(k, L, gamma, sigma2);
  const double gap = b_gap(b);
  if (gap <= 0.0 || b >= 1.0) return 1.0;  // vanishing pilot excess
  const double md = static_cast<double>(M);
  const double log_prefactor = -md * gap - std::log(2.0 * std::sqrt(2.0 * std::numbers::pi * md));
  const double bracket = 1.0 / (1.0 - b) + 1.0 / std::sqrt(2.0 * gap);
  const double log_p = log_prefactor + std::log(bracket);
  return clamp01(std::exp(log_p));
}

double sinr(Beamformer bf, double k, double L, int M, double gamma, double sigma2) {
  check_load_args(L, gamma, sigma2);
  if (M < 1) throw OutOfRange("M", "need at least one antenna");
  if (!(k >= 0.0)) throw OutOfRange("k", "must be >= 0");
  if (!(k < L)) throw OutOfRange("k", "load must be below the pilot length");
  const double md = static_cast<double>(M);
  if (bf == Beamformer::kMrc) {
    return md * gamma * gamma /
           ((gamma + sigma2 / (L - k)) * (k * gamma + sigma2));
  }
  if (!(k < md)) throw OutOfRange("k", "zero-forcing needs fewer active users than antennas");
  return (md - k) * (L - k) * gamma * gamma / (sigma2 * (gamma * L + sigma2));
}

double ser(int W, double sinr_value) {
  if (W != 2 && W != 4) throw OutOfRange("W", "PSK order must be 2 or 4");
  if (!(sinr_value >= 0.0)) throw OutOfRange("sinr_value", "must be >= 0");
  if (W == 2) return clamp01(q_function(std::sqrt(2.0 * sinr_value)));
  const double q = q_function(std::sqrt(sinr_value));
  return clamp01(2.0 * q - q * q);
}

double ser_regime(Beamformer bf, int W, double k, double L, int M, double gamma, double sigma2) {
  if (k >= L) return 1.0;
  if (bf == Beamformer::kZf && k >= static_cast<double>(M)) return 1.0;
  return ser(W, sinr(bf, k, L, M, gamma, sigma2));
}

SstrPoint sstr_exact(const SystemConfig& config, int L, double epsilon, Beamformer bf) {
  check_sstr_args(config, L, epsilon);
  const double lambda = config.p_a * epsilon;
  const int cutoff = load_cutoff(config, L, bf);
  double sum = 0.0;
  for (int k = 1; k <= cutoff; ++k) {
    const double q_k = binomial_pmf(config.N, k, lambda);
    if (q_k == 0.0) continue;
    const double p_miss = miss_probability(k, L, config.M, config.gamma, config.sigma2);
    const double psi = ser_regime(bf, config.W, k, L, config.M, config.gamma, config.sigma2);
    sum += static_cast<double>(k) * q_k * (1.0 - p_miss) * (1.0 - psi);
  }
  const double prefactor = static_cast<double>(config.T - L) / static_cast<double>(config.T);
  return {L, epsilon, prefactor * sum, SstrMethod::kClosedForm, 0.0};
}

double k_bar(const SystemConfig& config, int L, double epsilon) {
  check_sstr_args(config, L, epsilon);
  const double lambda = config.p_a * epsilon;
  const int cutoff = std::min(config.N, L - 1);
  double mass = 0.0;
  double first_moment = 0.0;
  for (int k = 1; k <= cutoff; ++k) {
    const double q_k = binomial_pmf(config.N, k, lambda);
    mass += q_k;
    first_moment += static_cast<double>(k) * q_k;
  }
  if (mass <= 0.0)
    throw DegenerateDistribution("no probability mass on loads below the pilot length");
  return first_moment / mass;
}

SstrPoint sstr_mean_approx(const SystemConfig& config, int L, double epsilon, Beamformer bf) {
  const double mean_load = k_bar(config, L, epsilon);  // validates arguments
  const double lambda = config.p_a * epsilon;
  const int cutoff = std::min(config.N, L - 1);
  double first_moment = 0.0;
  for (int k = 1; k <= cutoff; ++k)
    first_moment += static_cast<double>(k) * binomial_pmf(config.N, k, lambda);
  const double p_miss = miss_probability(mean_load, L, config.M, config.gamma, config.sigma2);
  const double psi = ser_regime(bf, config.W, mean_load, L, config.M, config.gamma, config.sigma2);
  const double prefactor = static_cast<double>(config.T - L) / static_cast<double>(config.T);
  return {L, epsilon, prefactor * (1.0 - p_miss) * (1.0 - psi) * first_moment,
          SstrMethod::kMeanApprox, 0.0};
}

}  // namespace sstr
