#pragma once

#include "sstr/model.hpp"

namespace sstr {

/// Receive combining scheme used in the data phase.
enum class Beamformer { kMrc, kZf };

/// How an SSTR (successful symbol transmission rate) value was obtained.
enum class SstrMethod { kClosedForm, kMeanApprox, kMonteCarlo };

/// One SSTR evaluation at a pilot length L and access parameter epsilon.
/// half_width is a 95% confidence half-width and is 0 for non-Monte-Carlo
/// methods. Values always lie in [0, (T-L)/T * N].
struct SstrPoint {
  int L = 0;
  double epsilon = 0.0;
  double value = 0.0;
  SstrMethod method = SstrMethod::kClosedForm;
  double half_width = 0.0;
};

/// Gaussian tail probability Q(x) = P(N(0,1) > x), evaluated through the
/// complementary error function; relative error <= 1e-12 over [-8, 8].
double q_function(double x);

/// log C(n, k) computed as sum_{i=1..k} log((n-k+i)/i). The summation route
/// is chosen so that ratios of adjacent coefficients cancel term by term in
/// floating point, keeping combinatorial identities exact to ~1e-13.
double log_binomial_coefficient(int n, int k);

/// log of the binomial pmf P(K = k), K ~ Binomial(n, lam). Exact -inf for
/// impossible outcomes at lam in {0, 1}.
double binomial_log_pmf(int n, int k, double lam);

/// Binomial pmf P(K = k) for K ~ Binomial(n, lam), evaluated in log space so
/// n in the thousands cannot overflow intermediate terms.
double binomial_pmf(int n, int k, double lam);

/// Load factor b(k, L) = sigma2/(gamma (L-k)) * log(1 + gamma (L-k)/sigma2),
/// always in (0, 1]; approaches 1 as gamma (L-k) -> 0. Requires k < L (k may
/// be fractional; see miss_probability).
double b_factor(double k, double L, double gamma, double sigma2);

/// Large-antenna-limit probability that an active user is missed by the
/// pilot-domain activity detector when k users are concurrently active with
/// pilot length L. Returns 1 for k >= L (detection impossible), otherwise
/// evaluates the asymptotic tail expression in log space and clamps to
/// [0, 1]. k may be fractional so the mean-load approximation can evaluate
/// the expression at a non-integer average load.
double miss_probability(double k, double L, int M, double gamma, double sigma2);

/// Post-combining SINR of one detected user under the asymptotic
/// channel-estimation model:
///   MRC: M gamma^2 / ((gamma + sigma2/(L-k)) (k gamma + sigma2))
///   ZF : (M-k)(L-k) gamma^2 / (sigma2 (gamma L + sigma2)), needs k < M.
/// Requires 0 <= k < L (and k < M for ZF); throws OutOfRange otherwise.
double sinr(Beamformer bf, double k, double L, int M, double gamma, double sigma2);

/// Symbol error probability of minimum-distance W-PSK detection at SINR g:
/// W=2 -> Q(sqrt(2 g)); W=4 -> 2 Q(sqrt g) - Q(sqrt g)^2. Clamped to [0, 1].
double ser(int W, double sinr_value);

/// Total symbol-error-rate map over all load regimes: returns 1 when k >= L,
/// or k >= M under ZF, and ser(W, sinr(...)) otherwise.
double ser_regime(Beamformer bf, int W, double k, double L, int M, double gamma, double sigma2);

/// Closed-form asymptotic SSTR at pilot length L and access parameter
/// epsilon: (T-L)/T * sum_k k q(k) (1 - p_miss(k, L)) (1 - ser(k, L)) with
/// K ~ Binomial(N, p_a epsilon). Terms with k >= L (or k >= M under ZF)
/// vanish, so the sum is truncated there. Requires 1 <= L <= T-1 and
/// epsilon in [0, 1].
SstrPoint sstr_exact(const SystemConfig& config, int L, double epsilon, Beamformer bf);

/// Mean load conditioned on the detectable regime:
/// sum_{k=1..L-1} k q(k) / sum_{k=1..L-1} q(k). Throws
/// DegenerateDistribution when no probability mass lies in [1, L-1].
double k_bar(const SystemConfig& config, int L, double epsilon);

/// Single-evaluation approximation of sstr_exact that pulls the success
/// probabilities out of the sum and evaluates them at the mean load k_bar:
/// (T-L)/T * (1 - p_miss(k_bar, L)) (1 - ser(k_bar, L)) * sum_{k<L} k q(k).
SstrPoint sstr_mean_approx(const SystemConfig& config, int L, double epsilon, Beamformer bf);

}  // namespace sstr
