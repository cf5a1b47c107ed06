#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "sstr/errors.hpp"
#include "sstr/simulator.hpp"

using namespace sstr;
using namespace sstr::sim;

TEST_CASE("constellation points have unit modulus and the documented phases") {
  CHECK(std::abs(psk_point(0, 2) - std::complex<double>(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(psk_point(1, 2) - std::complex<double>(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(psk_point(0, 4) - std::complex<double>(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(psk_point(1, 4) - std::complex<double>(0.0, 1.0)) < 1e-15);
  CHECK(std::abs(psk_point(2, 4) - std::complex<double>(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(psk_point(3, 4) - std::complex<double>(0.0, -1.0)) < 1e-15);
  CHECK_THROWS_AS(psk_point(0, 3), OutOfRange);
  CHECK_THROWS_AS(psk_point(0, 8), OutOfRange);
  CHECK_THROWS_AS(psk_point(-1, 4), OutOfRange);
  CHECK_THROWS_AS(psk_point(4, 4), OutOfRange);
}

TEST_CASE("symbol detection inverts clean transmissions and breaks ties low") {
  for (const int W : {2, 4}) {
    Eigen::MatrixXcd clean(1, W);
    for (int s = 0; s < W; ++s) clean(0, s) = 3.7 * psk_point(s, W);
    const Eigen::MatrixXi got = detect_symbols(clean, W);
    for (int s = 0; s < W; ++s) CHECK(got(0, s) == s);
  }
  Eigen::MatrixXcd probes(1, 4);
  probes(0, 0) = std::complex<double>(0.0, 0.0);    // exact tie: all metrics 0
  probes(0, 1) = std::complex<double>(1.0, 0.9);    // leans toward symbol 0
  probes(0, 2) = std::complex<double>(-0.9, 1.0);   // leans toward symbol 1
  probes(0, 3) = std::complex<double>(0.1, -10.0);  // dominated by symbol 3
  const Eigen::MatrixXi got4 = detect_symbols(probes, 4);
  CHECK(got4(0, 0) == 0);
  CHECK(got4(0, 1) == 0);
  CHECK(got4(0, 2) == 1);
  CHECK(got4(0, 3) == 3);
  Eigen::MatrixXcd tie2(1, 1);
  tie2(0, 0) = std::complex<double>(0.0, 0.0);  // exact tie in BPSK too
  CHECK(detect_symbols(tie2, 2)(0, 0) == 0);
  CHECK_THROWS_AS(detect_symbols(probes, 5), OutOfRange);
}

TEST_CASE("maximum-ratio filters are the channel estimates themselves") {
  RngStream rng(31, 10);
  Eigen::MatrixXcd h(6, 3);
  for (int j = 0; j < 3; ++j)
    for (int m = 0; m < 6; ++m) h(m, j) = rng.cgaussian(1.0);
  const Eigen::MatrixXcd f = mrc_filters(h);
  CHECK((f - h).norm() == 0.0);
}

TEST_CASE("interference-suppressing filters invert the channel or refuse") {
  RngStream rng(31, 11);
  const int M = 8, K = 3;
  Eigen::MatrixXcd h(M, K);
  for (int j = 0; j < K; ++j)
    for (int m = 0; m < M; ++m) h(m, j) = rng.cgaussian(1.0);

  const Eigen::MatrixXcd f = zf_filters(h);
  const Eigen::MatrixXcd cross = f.adjoint() * h;
  CHECK((cross - Eigen::MatrixXcd::Identity(K, K)).norm() < 1e-8);

  const Eigen::MatrixXcd empty = zf_filters(Eigen::MatrixXcd(M, 0));
  CHECK(empty.rows() == M);
  CHECK(empty.cols() == 0);

  Eigen::MatrixXcd overloaded(2, 5);
  overloaded.setOnes();
  CHECK_THROWS_AS(zf_filters(overloaded), ZfUnavailable);

  Eigen::MatrixXcd collinear(M, 2);
  collinear.col(0) = h.col(0);
  collinear.col(1) = h.col(0);  // rank one
  CHECK_THROWS_AS(zf_filters(collinear), ZfUnavailable);
}

TEST_CASE("payload synthesis draws valid symbols at the commanded power") {
  RngStream rng(32, 12);
  const int M = 4, P = 5000;
  std::vector<double> gains = {1.0, 1.0, 1.0};
  ChannelSet idle_channels = draw_channels(rng, M, gains);
  const std::vector<double> rho = {2.0, 2.0, 2.0};

  // No active users: the observation is pure noise of the given variance.
  const DataPhase silent = data_phase(idle_channels, {}, rho, P, 4, 0.7, rng);
  CHECK(silent.symbols.rows() == 0);
  const double noise_mean = silent.y.squaredNorm() / static_cast<double>(M * P);
  CHECK(noise_mean == doctest::Approx(0.7).epsilon(0.05));

  // Two active users at rho = 2: mean energy per entry is K rho + sigma2,
  // averaged over fresh channel draws to wash out the per-call channel norm.
  double energy = 0.0;
  int entries = 0;
  const int calls = 600, payload = 25;
  for (int c = 0; c < calls; ++c) {
    const ChannelSet ch = draw_channels(rng, M, gains);
    const DataPhase dp = data_phase(ch, {0, 2}, rho, payload, 4, 0.5, rng);
    CHECK(dp.symbols.rows() == 2);
    CHECK(dp.symbols.cols() == payload);
    CHECK(dp.symbols.minCoeff() >= 0);
    CHECK(dp.symbols.maxCoeff() < 4);
    energy += dp.y.squaredNorm();
    entries += M * payload;
  }
  const double mean = energy / static_cast<double>(entries);
  CHECK(mean == doctest::Approx(2.0 * 2.0 + 0.5).epsilon(0.08));

  CHECK_THROWS_AS(data_phase(idle_channels, {0}, {2.0}, P, 4, 0.5, rng), ShapeMismatch);
  CHECK_THROWS_AS(data_phase(idle_channels, {5}, rho, P, 4, 0.5, rng), OutOfRange);
  CHECK_THROWS_AS(data_phase(idle_channels, {0}, rho, 0, 4, 0.5, rng), OutOfRange);
  CHECK_THROWS_AS(data_phase(idle_channels, {0}, rho, P, 4, 0.0, rng), OutOfRange);
  CHECK_THROWS_AS(data_phase(idle_channels, {0}, rho, P, 3, 0.5, rng), OutOfRange);
}

namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.N = 20;
  c.M = 8;
  c.T = 40;
  c.p_a = 0.1;
  c.gamma = 100.0;
  c.sigma2 = 1.0;
  c.W = 4;
  c.amp_iters = 10;
  c.se_samples = 500;
  c.seed = 7;
  return c;
}

bool same_result(const TrialResult& a, const TrialResult& b) {
  return a.active == b.active && a.detected == b.detected && a.hits == b.hits &&
         a.symbol_ok == b.symbol_ok && a.symbol_total == b.symbol_total &&
         a.tau2_final == b.tau2_final;
}

}  // namespace

TEST_CASE("a block with as many active users as pilot slots delivers nothing") {
  const SystemConfig c = small_config();
  const int L = 16;
  TrialOptions opt;
  opt.condition_k = L;
  RngStream rng(c.seed, kTrialStreamBase);
  const TrialResult r = run_trial(c, L, 1.0, rng, opt);
  CHECK(r.active == L);
  CHECK(r.detected == 0);
  CHECK(r.hits == 0);
  CHECK(r.symbol_ok == 0);
  CHECK(r.symbol_total == static_cast<std::int64_t>(L) * (c.T - L));
  CHECK(r.tau2_final == 0.0);
}

TEST_CASE("a block with no active users completes with all-zero counts") {
  const SystemConfig c = small_config();
  TrialOptions opt;
  opt.condition_k = 0;
  RngStream rng(c.seed, kTrialStreamBase + 1);
  const TrialResult r = run_trial(c, 16, 1.0, rng, opt);
  CHECK(r.active == 0);
  CHECK(r.symbol_total == 0);
  CHECK(r.symbol_ok == 0);
  CHECK(r.hits == 0);
  CHECK(r.tau2_final > 0.0);
}

TEST_CASE("trials are pure functions of their stream") {
  const SystemConfig c = small_config();
  TrialOptions opt;
  opt.condition_k = 2;
  RngStream rng_a(c.seed, kTrialStreamBase + 2);
  RngStream rng_b(c.seed, kTrialStreamBase + 2);
  const TrialResult a = run_trial(c, 16, 1.0, rng_a, opt);
  const TrialResult b = run_trial(c, 16, 1.0, rng_b, opt);
  CHECK(same_result(a, b));
  CHECK(a.active == 2);

  RngStream rng_c(c.seed, kTrialStreamBase + 3);
  const TrialResult other = run_trial(c, 16, 1.0, rng_c, opt);
  CHECK(other.active == 2);  // conditioning holds on every stream
}

TEST_CASE("trial inputs are validated") {
  const SystemConfig c = small_config();
  RngStream rng(c.seed, 77);
  CHECK_THROWS_AS(run_trial(c, 0, 1.0, rng), OutOfRange);
  CHECK_THROWS_AS(run_trial(c, c.T, 1.0, rng), OutOfRange);
  CHECK_THROWS_AS(run_trial(c, 16, 1.5, rng), OutOfRange);
  TrialOptions opt;
  opt.condition_k = c.N + 1;
  CHECK_THROWS_AS(run_trial(c, 16, 1.0, rng, opt), OutOfRange);

  TrialOptions bad_pilots;
  bad_pilots.condition_k = 1;
  const PilotBook wrong = PilotBook::Zero(8, c.N);  // pilot length mismatch
  bad_pilots.fixed_pilots = &wrong;
  CHECK_THROWS_AS(run_trial(c, 16, 1.0, rng, bad_pilots), ShapeMismatch);

  TrialOptions bad_gains;
  const std::vector<double> two_gains = {1.0, 1.0};
  bad_gains.gains = &two_gains;
  CHECK_THROWS_AS(run_trial(c, 16, 1.0, rng, bad_gains), ShapeMismatch);
}

TEST_CASE("high-SNR blocks deliver most payload symbols under both combiners") {
  const SystemConfig c = small_config();
  const int L = 16;
  TrialOptions opt;
  opt.condition_k = 2;

  for (const Beamformer bf : {Beamformer::kMrc, Beamformer::kZf}) {
    opt.beamformer = bf;
    const TrialBatch batch = run_trials(c, L, 1.0, 40, opt);
    REQUIRE(batch.results.size() == 40);
    CHECK(batch.L == L);
    CHECK(batch.epsilon == 1.0);
    std::int64_t ok = 0, total = 0;
    int hits = 0, active = 0;
    for (const TrialResult& r : batch.results) {
      CHECK(r.active == 2);
      CHECK(r.symbol_total == 2 * (c.T - L));
      ok += r.symbol_ok;
      total += r.symbol_total;
      hits += r.hits;
      active += r.active;
    }
    CHECK(hits >= static_cast<int>(0.9 * active));
    CHECK(static_cast<double>(ok) >= 0.8 * static_cast<double>(total));
  }
}

TEST_CASE("multi-threaded batches reproduce the single-threaded results") {
  SystemConfig c = small_config();
  c.gamma = 10.0;
  TrialOptions opt;
  const TrialBatch one = run_trials(c, 12, 0.7, 24, opt, 1);
  const TrialBatch two = run_trials(c, 12, 0.7, 24, opt, 2);
  REQUIRE(one.results.size() == two.results.size());
  for (std::size_t i = 0; i < one.results.size(); ++i)
    CHECK(same_result(one.results[i], two.results[i]));
  CHECK_THROWS_AS(run_trials(c, 12, 0.7, 0, opt), OutOfRange);
}

TEST_CASE("batch summaries compute the documented statistics") {
  SystemConfig c = small_config();
  TrialBatch batch;
  batch.L = 16;
  batch.epsilon = 0.5;

  batch.results.resize(1);
  CHECK_THROWS_AS(empirical_sstr(batch, c), InsufficientTrials);
  CHECK_THROWS_AS(empirical_user_rate(batch, c), InsufficientTrials);

  // Two blocks with 10 and 20 delivered symbols out of T = 40 slots.
  batch.results.resize(2);
  batch.results[0].symbol_ok = 10;
  batch.results[0].symbol_total = 48;
  batch.results[0].active = 2;
  batch.results[1].symbol_ok = 20;
  batch.results[1].symbol_total = 48;
  batch.results[1].active = 2;
  const SstrPoint rate = empirical_sstr(batch, c);
  CHECK(rate.method == SstrMethod::kMonteCarlo);
  CHECK(rate.L == 16);
  CHECK(rate.epsilon == 0.5);
  CHECK(rate.value == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(rate.half_width == doctest::Approx(1.96 * 0.125).epsilon(1e-12));

  // Per-user rate: (T-L)/T = 0.6; a block with nothing sent contributes 0.
  batch.results[0].symbol_ok = 12;
  batch.results[0].symbol_total = 24;
  batch.results[1].symbol_ok = 0;
  batch.results[1].symbol_total = 0;
  const SstrPoint user = empirical_user_rate(batch, c);
  CHECK(user.value == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(user.half_width == doctest::Approx(1.96 * 0.15).epsilon(1e-12));
}

TEST_CASE("detection statistics aggregate the documented ratios") {
  SystemConfig c = small_config();
  c.N = 10;
  c.T = 20;
  TrialBatch batch;
  batch.L = 10;  // payload 10 per block
  batch.results.resize(2);
  batch.results[0].active = 4;
  batch.results[0].detected = 5;
  batch.results[0].hits = 3;
  batch.results[0].symbol_ok = 25;
  batch.results[1].active = 2;
  batch.results[1].detected = 2;
  batch.results[1].hits = 2;
  batch.results[1].symbol_ok = 15;
  const DetectionStats stats = detection_stats(batch, c);
  CHECK(stats.miss_rate == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(stats.false_alarm_rate == doctest::Approx(2.0 / 14.0).epsilon(1e-12));
  CHECK(stats.ser_given_detected == doctest::Approx(0.2).epsilon(1e-12));

  const DetectionStats empty = detection_stats(TrialBatch{}, c);
  CHECK(empty.miss_rate == 0.0);
  CHECK(empty.false_alarm_rate == 0.0);
  CHECK(empty.ser_given_detected == 0.0);
}
