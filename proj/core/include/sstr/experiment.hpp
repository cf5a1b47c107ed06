#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sstr/analytic.hpp"
#include "sstr/model.hpp"
#include "sstr/optimizer.hpp"

namespace sstr::experiment {

enum class Command { kAnalytic, kSimulate, kSweep, kOptimize };

/// Parameter a sweep command varies, one value per CSV row.
enum class SweepParameter { kNone, kN, kM, kT, kPa, kEpsilon, kL, kSnrDb, kW };

/// Quantity an optimize command searches over.
enum class OptimizeTarget { kNone, kEpsilon, kLength, kJoint };

/// One fully-validated experiment description, assembled from a flat
/// `key = value` file (see parse_spec for the key list).
struct ExperimentSpec {
  SystemConfig config;
  Command command = Command::kAnalytic;
  Beamformer beamformer = Beamformer::kMrc;
  double epsilon = 1.0;  ///< access parameter of the evaluation point
  int L = 0;             ///< pilot length of the evaluation point
  int trials = 0;        ///< Monte-Carlo blocks per point; 0 = analytic only
  SweepParameter sweep = SweepParameter::kNone;
  std::vector<double> sweep_values;
  OptimizeTarget optimize = OptimizeTarget::kNone;
  int restarts = 10;    ///< condensation restarts for optimize commands
  int grid_size = 101;  ///< grid oracle resolution for optimize fallbacks
  bool use_mean_approx = false;  ///< score pilot-length search by mean load
  /// Condition every trial on exactly this many active users (< 0 = off);
  /// rows then report per-user conditional success rates.
  int condition_k = -1;
  bool fixed_pilot_book = false;  ///< one shared pilot book per row
  bool report_runtime = false;    ///< fill the runtime_s column (non-deterministic)
  std::string output;             ///< default CSV path; empty = stdout
};

/// Parses the flat key=value spec format: one `key = value` per line, `#`
/// starts a comment, blank lines ignored. Recognized keys:
///   N, M, T, p_a, gamma, snr_db, sigma2, W, amp_iters, se_samples, seed,
///   amp_threshold, amp_empirical_tau, command, beamformer, epsilon, L,
///   trials, sweep, sweep_values, optimize, restarts, grid_size,
///   use_mean_approx, condition_k, fixed_pilot_book, report_runtime, output.
/// `gamma` and `snr_db` are mutually exclusive; snr_db sets
/// gamma = sigma2 * 10^(snr_db/10). `sweep_values` accepts a comma list or
/// `start:step:stop` (inclusive). Unknown or duplicate keys, malformed
/// values, and missing required keys raise ParseError with the offending
/// line; field-range violations raise OutOfRange (e.g. simulate with
/// trials < 2).
ExperimentSpec parse_spec(const std::string& text);

/// CSV header used by analytic, simulate and sweep commands. The optimize
/// command instead emits `epsilon_opt,L_opt,value,method,restarts`.
inline constexpr std::string_view kCsvHeader =
    "sweep_value,sstr_analytic,sstr_mean_approx,sstr_mc,mc_half_width,"
    "p_miss_at_kbar,ser_at_kbar,runtime_s";

struct RunOutput {
  std::string csv;          ///< header + rows, LF line endings
  int rows = 0;             ///< data rows emitted
  double wall_time_s = 0.0; ///< total wall time of the run
};

/// Runs the experiment and renders its CSV. Apart from the opt-in runtime_s
/// column, the CSV is a pure function of (spec, config.seed): rerunning the
/// same spec reproduces it byte for byte. `threads` bounds the worker count
/// of Monte-Carlo batches and per-L optimizer scans.
RunOutput execute(const ExperimentSpec& spec, int threads = 1);

/// FNV-1a 64-bit hash, used to fingerprint spec files in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace sstr::experiment
