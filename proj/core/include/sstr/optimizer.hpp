#pragma once

#include <optional>
#include <vector>

#include "sstr/analytic.hpp"
#include "sstr/model.hpp"

namespace sstr::opt {

/// Search strategy that produced an OptResult.
enum class OptMethod { kCgp, kGrid, kExhaustiveMeanApprox, kExhaustiveExact, kJoint };

/// Stable lower-case name ("cgp", "grid", ...) for reports.
const char* to_string(OptMethod method);

struct OptDiagnostics {
  int iterations = 0;     ///< inner/outer iterations of the winning run
  int restarts = 0;       ///< random restarts attempted
  bool converged = true;  ///< false when an iteration cap was hit
  double t_final = 1.0;   ///< slack variable t at the solution
};

/// Outcome of an optimization; fields not optimized over stay absent.
struct OptResult {
  std::optional<double> epsilon_opt;
  std::optional<int> L_opt;
  double value = 0.0;
  OptMethod method = OptMethod::kGrid;
  OptDiagnostics diagnostics;
};

/// Logarithms of the rate polynomial coefficients f(k, L) for k = 1..N
/// (entry k-1), where
///   f(k, L) = (T-L)/T * C(N,k) p_a^k k (1 - p_miss(k,L)) (1 - ser(k,L)),
/// so that sum_k f(k,L) eps^k (1 - p_a eps)^{N-k} equals the closed-form
/// rate at (L, eps). Structurally zero terms (k >= L, and k >= M under the
/// interference-suppressing combiner) are -infinity. Log space is essential:
/// C(N,k) p_a^k spans hundreds of orders of magnitude at N = 2000.
std::vector<double> signomial_log_coefficients(const SystemConfig& config, int L, Beamformer bf);

/// Evaluates sum_k exp(log_f[k-1]) eps^k (1 - p_a eps)^{N-k} by
/// log-sum-exp; returns 0 when no term has support.
double signomial_value(const std::vector<double>& log_f, int n_users, double p_a, double epsilon);

/// One condensation run of the geometric-programming relaxation.
struct CgpSolution {
  double epsilon = 0.0;
  double t = 1.0;  ///< slack of the access constraint p_a eps + t <= 1
  double value = 0.0;
  int iterations = 0;      ///< outer condensation rounds used
  bool converged = false;  ///< objective change fell below 1e-9
  std::vector<double> objective_trace;  ///< objective after each round
};

/// Maximizes sum_k f_k eps^k t^{N-k} subject to p_a eps + t <= 1 and
/// 0 <= eps <= 1 by iterated condensation: the current iterate's term shares
/// become AM-GM weights that condense the objective to a monomial, whose
/// log-space geometric program is concave and is solved by damped Newton
/// ascent with backtracking (gradient tolerance 1e-8, 500-step cap); rounds
/// repeat until the objective moves by less than 1e-9. Terms below 1e-300 of
/// the largest coefficient are dropped up front. The objective never
/// decreases across rounds and every iterate is feasible. Throws
/// DegenerateDistribution when no term has support.
CgpSolution cgp_solve(const std::vector<double>& log_f, int n_users, double p_a,
                      double epsilon0);

/// Uniform grid of `grid_size` points on [0, 1] (ties toward smaller eps),
/// refined by golden section around the best point to 1e-6 in eps.
OptResult optimize_epsilon_grid(const SystemConfig& config, int L, Beamformer bf,
                                int grid_size = 101);

/// Best of `restarts` condensation runs, each started from a uniform random
/// feasible eps drawn from its own restart stream. When the rate is
/// identically zero (e.g. p_a = 0 or L = 1) returns eps = 0 with value 0.
OptResult optimize_epsilon_cgp(const SystemConfig& config, int L, Beamformer bf,
                               int restarts = 10);

/// Exhaustive search over L in {1, ..., T-1} at fixed eps, scoring each L by
/// the mean-load approximation (flag on) or the full closed form (flag off);
/// ties break toward smaller L (more payload at equal rate). A pilot length
/// whose mean load is undefined scores 0.
OptResult optimize_length(const SystemConfig& config, double epsilon, Beamformer bf,
                          bool use_mean_approx);

/// Joint search: per-L condensation (grid fallback when a run fails to
/// converge), then exhaustive over L; per-L solves may run concurrently.
/// With p_a = 0 every point scores 0 and (L=1, eps=0) is returned.
OptResult optimize_joint(const SystemConfig& config, Beamformer bf, int restarts = 10,
                         int grid_size = 101, int threads = 1);

}  // namespace sstr::opt
