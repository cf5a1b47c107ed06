#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace sstr {

/// Reserved stream identifiers so independent consumers of randomness never
/// collide. Per-trial streams are `kTrialStreamBase + trial_index`, restart
/// streams of the optimizer are `kOptimizerStreamBase + restart_index`, etc.
inline constexpr std::uint64_t kStateEvolutionStream = 0x5e5e5e5e00000001ull;
inline constexpr std::uint64_t kPilotBookStream = 0x9b9b9b9b00000002ull;
inline constexpr std::uint64_t kTrialStreamBase = 0x7a11000000000000ull;
inline constexpr std::uint64_t kOptimizerStreamBase = 0x0c60000000000000ull;

/// Splittable pseudo-random stream: every (seed, stream) pair yields an
/// independent, reproducible sequence regardless of scheduling order, so
/// parallel workers can each own a stream derived from their work index.
///
/// The stream key is mixed into the 64-bit seed with SplitMix64 finalization
/// and drives a Mersenne-Twister engine; all draws below are pure functions
/// of (seed, stream, draw index).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform double strictly inside (0, 1); never returns 0, safe under log.
  double uniform();

  /// Uniform integer in [0, n); n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard real Gaussian N(0, 1).
  double gaussian();

  /// Circularly-symmetric complex Gaussian CN(0, variance).
  std::complex<double> cgaussian(double variance);

  /// Bernoulli draw with success probability p in [0, 1].
  bool bernoulli(double p);

 private:
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64 engine_;
  double spare_gaussian_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sstr
