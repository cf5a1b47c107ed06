#include "sstr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sstr/errors.hpp"
#include "sstr/parallel.hpp"
#include "sstr/rng.hpp"

namespace sstr::opt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoefficientDropFactor = -690.77552789821371;  // log(1e-300)
constexpr double kInnerGradTol = 1e-8;
constexpr int kInnerIterCap = 500;
constexpr double kOuterObjTol = 1e-9;
constexpr int kOuterIterCap = 500;
constexpr double kEpsFloor = 1e-9;

/// One retained signomial term f_k eps^k t^{N-k}.
struct Term {
  int k = 0;
  double log_f = -kInf;
};

std::vector<Term> retained_terms(const std::vector<double>& log_f) {
  double log_max = -kInf;
  for (const double v : log_f) log_max = std::max(log_max, v);
  std::vector<Term> terms;
  if (log_max == -kInf) return terms;
  for (std::size_t i = 0; i < log_f.size(); ++i)
    if (log_f[i] >= log_max + kCoefficientDropFactor)
      terms.push_back({static_cast<int>(i) + 1, log_f[i]});
  return terms;
}

/// log of sum_k f_k eps^k t^{N-k} over the retained terms at t = 1 - p_a eps.
double log_objective(const std::vector<Term>& terms, int n_users, double p_a, double epsilon) {
  const double log_eps = std::log(epsilon);
  const double log_t = std::log1p(-p_a * epsilon);
  double peak = -kInf;
  for (const Term& term : terms) {
    const int residual = n_users - term.k;
    const double v = term.log_f + static_cast<double>(term.k) * log_eps +
                     (residual == 0 ? 0.0 : static_cast<double>(residual) * log_t);
    peak = std::max(peak, v);
  }
  if (peak == -kInf) return -kInf;
  double sum = 0.0;
  for (const Term& term : terms) {
    const int residual = n_users - term.k;
    const double v = term.log_f + static_cast<double>(term.k) * log_eps +
                     (residual == 0 ? 0.0 : static_cast<double>(residual) * log_t);
    sum += std::exp(v - peak);
  }
  return peak + std::log(sum);
}

/// Condensed subproblem in u = log eps with the access constraint active:
/// F(u) = k_mean u + (N - k_mean) log(1 - p_a e^u), concave on u <= 0.
struct CondensedProblem {
  double k_mean = 0.0;
  int n_users = 0;
  double p_a = 0.0;

  double value(double u) const {
    const double rest = static_cast<double>(n_users) - k_mean;
    if (rest == 0.0) return k_mean * u;
    return k_mean * u + rest * std::log1p(-p_a * std::exp(u));
  }
  double grad(double u) const {
    const double z = p_a * std::exp(u);
    return k_mean - (static_cast<double>(n_users) - k_mean) * z / (1.0 - z);
  }
  double hess(double u) const {
    const double z = p_a * std::exp(u);
    return -(static_cast<double>(n_users) - k_mean) * z / ((1.0 - z) * (1.0 - z));
  }
};

/// Damped Newton ascent of the condensed subproblem over
/// u in [log(kEpsFloor), 0]; returns (u*, converged).
std::pair<double, bool> maximize_condensed(const CondensedProblem& problem, double u_start) {
  const double u_lo = std::log(kEpsFloor);
  const double u_hi = 0.0;
  double u = std::clamp(u_start, u_lo, u_hi);
  for (int it = 0; it < kInnerIterCap; ++it) {
    const double g = problem.grad(u);
    if (std::abs(g) <= kInnerGradTol) return {u, true};
    const double h = problem.hess(u);
    double step = h < 0.0 ? -g / h : (g > 0.0 ? 1.0 : -1.0);
    const double f0 = problem.value(u);
    double damping = 1.0;
    double u_next = u;
    for (int bt = 0; bt < 64; ++bt) {
      const double candidate = std::clamp(u + damping * step, u_lo, u_hi);
      if (std::isfinite(problem.value(candidate)) && problem.value(candidate) >= f0) {
        u_next = candidate;
        break;
      }
      damping *= 0.5;
    }
    if (u_next == u) {
      // No admissible move: the gradient points outside the box, so the
      // projected gradient vanishes and u is the constrained maximizer.
      const bool at_boundary = (u == u_hi && g > 0.0) || (u == u_lo && g < 0.0);
      return {u, at_boundary};
    }
    u = u_next;
  }
  return {u, std::abs(problem.grad(u)) <= kInnerGradTol};
}

double objective_for(const SystemConfig& config, int L, double epsilon, Beamformer bf,
                     bool use_mean_approx) {
  if (use_mean_approx) {
    try {
      return sstr_mean_approx(config, L, epsilon, bf).value;
    } catch (const DegenerateDistribution&) {
      return 0.0;
    }
  }
  return sstr_exact(config, L, epsilon, bf).value;
}

}  // namespace

const char* to_string(OptMethod method) {
  switch (method) {
    case OptMethod::kCgp: return "cgp";
    case OptMethod::kGrid: return "grid";
    case OptMethod::kExhaustiveMeanApprox: return "exhaustive_mean_approx";
    case OptMethod::kExhaustiveExact: return "exhaustive_exact";
    case OptMethod::kJoint: return "joint";
  }
  return "unknown";
}

std::vector<double> signomial_log_coefficients(const SystemConfig& config, int L,
                                               Beamformer bf) {
  validate_config(config);
  if (L < 1 || L > config.T - 1)
    throw OutOfRange("L", "pilot length must leave at least one payload slot");
  std::vector<double> log_f(static_cast<std::size_t>(config.N), -kInf);
  if (config.p_a == 0.0) return log_f;
  const double log_prefactor =
      std::log(static_cast<double>(config.T - L) / static_cast<double>(config.T));
  const double log_pa = std::log(config.p_a);
  const int cutoff = std::min(config.N, L - 1);
  for (int k = 1; k <= cutoff; ++k) {
    const double p_miss = miss_probability(k, L, config.M, config.gamma, config.sigma2);
    const double psi =
        ser_regime(bf, config.W, k, L, config.M, config.gamma, config.sigma2);
    if (p_miss >= 1.0 || psi >= 1.0) continue;
    log_f[static_cast<std::size_t>(k) - 1] =
        log_prefactor + log_binomial_coefficient(config.N, k) +
        static_cast<double>(k) * log_pa + std::log(static_cast<double>(k)) +
        std::log1p(-p_miss) + std::log1p(-psi);
  }
  return log_f;
}

double signomial_value(const std::vector<double>& log_f, int n_users, double p_a,
                       double epsilon) {
  if (n_users < 1) throw OutOfRange("n_users", "must be >= 1");
  if (static_cast<int>(log_f.size()) != n_users)
    throw ShapeMismatch("need one coefficient per term order 1..N");
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw OutOfRange("p_a", "must lie in [0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
  if (epsilon == 0.0) return 0.0;
  const std::vector<Term> terms = retained_terms(log_f);
  if (terms.empty()) return 0.0;
  return std::exp(log_objective(terms, n_users, p_a, epsilon));
}

CgpSolution cgp_solve(const std::vector<double>& log_f, int n_users, double p_a,
                      double epsilon0) {
  if (n_users < 1) throw OutOfRange("n_users", "must be >= 1");
  if (static_cast<int>(log_f.size()) != n_users)
    throw ShapeMismatch("need one coefficient per term order 1..N");
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw OutOfRange("p_a", "must lie in [0, 1]");
  if (!(epsilon0 > 0.0 && epsilon0 <= 1.0)) throw OutOfRange("epsilon0", "must lie in (0, 1]");
  const std::vector<Term> terms = retained_terms(log_f);
  if (terms.empty()) throw DegenerateDistribution("rate polynomial has no positive term");

  CgpSolution sol;
  sol.epsilon = std::max(epsilon0, kEpsFloor);
  double log_value = log_objective(terms, n_users, p_a, sol.epsilon);
  sol.value = std::exp(log_value);
  sol.objective_trace.push_back(sol.value);
  bool inner_ok = true;

  std::vector<double> weights(terms.size());
  for (int round = 0; round < kOuterIterCap; ++round) {
    ++sol.iterations;
    // AM-GM weights: each term's share of the objective at the iterate.
    const double log_eps = std::log(sol.epsilon);
    const double log_t = std::log1p(-p_a * sol.epsilon);
    double k_mean = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const int residual = n_users - terms[i].k;
      const double log_term = terms[i].log_f + static_cast<double>(terms[i].k) * log_eps +
                              (residual == 0 ? 0.0 : static_cast<double>(residual) * log_t);
      weights[i] = std::exp(log_term - log_value);
      k_mean += weights[i] * static_cast<double>(terms[i].k);
    }

    const CondensedProblem condensed{k_mean, n_users, p_a};
    const auto [u_star, ok] = maximize_condensed(condensed, log_eps);
    inner_ok = ok;
    const double eps_next = std::exp(u_star);
    const double log_value_next = log_objective(terms, n_users, p_a, eps_next);
    const double value_next = std::exp(log_value_next);

    // The condensed surrogate under-estimates the objective and is tight at
    // the iterate, so accepting its maximizer can never decrease the value.
    if (value_next >= sol.value) {
      sol.epsilon = eps_next;
      log_value = log_value_next;
    }
    const double previous = sol.objective_trace.back();
    sol.value = std::max(sol.value, value_next);
    sol.objective_trace.push_back(sol.value);
    if (std::abs(sol.value - previous) < kOuterObjTol) {
      sol.converged = inner_ok;
      break;
    }
  }
  sol.t = 1.0 - p_a * sol.epsilon;
  return sol;
}

OptResult optimize_epsilon_grid(const SystemConfig& config, int L, Beamformer bf,
                                int grid_size) {
  validate_config(config);
  if (grid_size < 3) throw OutOfRange("grid_size", "need at least three grid points");
  const auto objective = [&](double eps) { return sstr_exact(config, L, eps, bf).value; };

  double best_eps = 0.0;
  double best_value = objective(0.0);
  for (int i = 1; i < grid_size; ++i) {
    const double eps = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    const double value = objective(eps);
    if (value > best_value) {
      best_value = value;
      best_eps = eps;
    }
  }

  // Golden-section refinement between the neighbors of the best grid point.
  const double spacing = 1.0 / static_cast<double>(grid_size - 1);
  double lo = std::max(0.0, best_eps - spacing);
  double hi = std::min(1.0, best_eps + spacing);
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  int iterations = 0;
  while (hi - lo > 1e-6) {
    ++iterations;
    if (f1 >= f2) {  // keep the left interval on ties: smaller eps preferred
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_value = objective(refined);
  if (refined_value > best_value) {
    best_value = refined_value;
    best_eps = refined;
  }

  OptResult result;
  result.epsilon_opt = best_eps;
  result.value = best_value;
  result.method = OptMethod::kGrid;
  result.diagnostics.iterations = iterations;
  result.diagnostics.restarts = 0;
  result.diagnostics.converged = true;
  result.diagnostics.t_final = 1.0 - config.p_a * best_eps;
  return result;
}

OptResult optimize_epsilon_cgp(const SystemConfig& config, int L, Beamformer bf,
                               int restarts) {
  validate_config(config);
  if (restarts < 1) throw OutOfRange("restarts", "need at least one restart");
  const std::vector<double> log_f = signomial_log_coefficients(config, L, bf);

  OptResult result;
  result.method = OptMethod::kCgp;
  result.diagnostics.restarts = restarts;
  if (retained_terms(log_f).empty()) {
    // The rate is identically zero; admit nobody, deterministically.
    result.epsilon_opt = 0.0;
    result.value = 0.0;
    result.diagnostics.converged = true;
    result.diagnostics.t_final = 1.0;
    return result;
  }

  bool have_best = false;
  CgpSolution best;
  for (int r = 0; r < restarts; ++r) {
    RngStream rng(config.seed, kOptimizerStreamBase + static_cast<std::uint64_t>(r));
    const double epsilon0 = rng.uniform();
    const CgpSolution sol = cgp_solve(log_f, config.N, config.p_a, epsilon0);
    if (!have_best || sol.value > best.value) {
      best = sol;
      have_best = true;
    }
  }
  result.epsilon_opt = best.epsilon;
  result.value = best.value;
  result.diagnostics.iterations = best.iterations;
  result.diagnostics.converged = best.converged;
  result.diagnostics.t_final = best.t;
  return result;
}

OptResult optimize_length(const SystemConfig& config, double epsilon, Beamformer bf,
                          bool use_mean_approx) {
  validate_config(config);
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
  int best_L = 1;
  double best_value = objective_for(config, 1, epsilon, bf, use_mean_approx);
  for (int L = 2; L <= config.T - 1; ++L) {
    const double value = objective_for(config, L, epsilon, bf, use_mean_approx);
    if (value > best_value) {  // strict: ties keep the smaller pilot length
      best_value = value;
      best_L = L;
    }
  }
  OptResult result;
  result.L_opt = best_L;
  result.value = best_value;
  result.method =
      use_mean_approx ? OptMethod::kExhaustiveMeanApprox : OptMethod::kExhaustiveExact;
  result.diagnostics.iterations = config.T - 1;
  result.diagnostics.converged = true;
  result.diagnostics.t_final = 1.0 - config.p_a * epsilon;
  return result;
}

OptResult optimize_joint(const SystemConfig& config, Beamformer bf, int restarts,
                         int grid_size, int threads) {
  validate_config(config);
  const int n_lengths = config.T - 1;
  std::vector<OptResult> per_length(static_cast<std::size_t>(n_lengths));
  parallel_for(static_cast<std::size_t>(n_lengths), threads, [&](std::size_t index) {
    const int L = static_cast<int>(index) + 1;
    OptResult r = optimize_epsilon_cgp(config, L, bf, restarts);
    if (!r.diagnostics.converged) r = optimize_epsilon_grid(config, L, bf, grid_size);
    per_length[index] = r;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < per_length.size(); ++i)
    if (per_length[i].value > per_length[best].value) best = i;  // ties: smaller L

  OptResult result = per_length[best];
  result.L_opt = static_cast<int>(best) + 1;
  result.method = OptMethod::kJoint;
  result.diagnostics.restarts = restarts;
  return result;
}

}  // namespace sstr::opt
