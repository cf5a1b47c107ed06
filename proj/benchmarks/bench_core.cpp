// Microbenchmarks for the hot paths: the closed-form rate (inner loop of
// every sweep and optimizer), the row denoiser (inner loop of detection),
// state evolution, one full detector run, the condensation solver, and one
// end-to-end simulated block.

#include <benchmark/benchmark.h>

#include <cmath>

#include "sstr/amp.hpp"
#include "sstr/analytic.hpp"
#include "sstr/model.hpp"
#include "sstr/optimizer.hpp"
#include "sstr/rng.hpp"
#include "sstr/simulator.hpp"

namespace {

using namespace sstr;

SystemConfig large_config() {
  SystemConfig c;
  c.N = 2000;
  c.M = 128;
  c.T = 200;
  c.p_a = 0.1;
  c.gamma = 10.0;
  c.W = 4;
  return c;
}

SystemConfig small_config() {
  SystemConfig c;
  c.N = 100;
  c.M = 32;
  c.T = 80;
  c.p_a = 0.1;
  c.gamma = 10.0;
  c.W = 4;
  c.amp_iters = 15;
  c.se_samples = 1000;
  c.seed = 3;
  return c;
}

void BM_ClosedFormRate(benchmark::State& state) {
  const SystemConfig c = large_config();
  const Beamformer bf = state.range(0) == 0 ? Beamformer::kMrc : Beamformer::kZf;
  for (auto _ : state) benchmark::DoNotOptimize(sstr_exact(c, 110, 0.5, bf).value);
}
BENCHMARK(BM_ClosedFormRate)->Arg(0)->Arg(1)->ArgName("zf");

void BM_MeanApproxRate(benchmark::State& state) {
  const SystemConfig c = large_config();
  for (auto _ : state)
    benchmark::DoNotOptimize(sstr_mean_approx(c, 110, 0.5, Beamformer::kMrc).value);
}
BENCHMARK(BM_MeanApproxRate);

void BM_MissProbability(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(miss_probability(100.0, 110.0, 128, 10.0, 1.0));
}
BENCHMARK(BM_MissProbability);

void BM_RowDenoiser(benchmark::State& state) {
  const int antennas = static_cast<int>(state.range(0));
  RngStream rng(1, 42);
  Eigen::VectorXcd r(antennas);
  for (int i = 0; i < antennas; ++i) r(i) = rng.cgaussian(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(amp::denoise(r, 1.5, 110, 10.0, 0.05).x_hat);
}
BENCHMARK(BM_RowDenoiser)->Arg(32)->Arg(128)->ArgName("antennas");

void BM_StateEvolution(benchmark::State& state) {
  const SystemConfig c = small_config();
  for (auto _ : state) benchmark::DoNotOptimize(amp::state_evolution(c, 32, 0.5));
}
BENCHMARK(BM_StateEvolution);

void BM_DetectorRun(benchmark::State& state) {
  const SystemConfig c = small_config();
  const int L = 32;
  RngStream rng(c.seed, 7);
  const std::vector<double> gains(static_cast<std::size_t>(c.N), 1.0);
  const ActivityVector activity = draw_activity_conditioned(rng, c.N, 10);
  const PilotBook pilots = draw_pilots(rng, L, c.N);
  const ChannelSet channels = draw_channels(rng, c.M, gains);
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(L, c.M);
  for (int n = 0; n < c.N; ++n)
    if (activity[static_cast<std::size_t>(n)])
      y.noalias() += pilots.col(n) *
                     (std::sqrt(static_cast<double>(L) * c.gamma) * channels.h.col(n).transpose());
  for (Eigen::Index m = 0; m < c.M; ++m)
    for (Eigen::Index l = 0; l < L; ++l) y(l, m) += rng.cgaussian(c.sigma2);
  const std::vector<double> schedule = amp::state_evolution(c, L, 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(amp::run(y, pilots, c, 0.5, gains, &schedule).detected_index);
}
BENCHMARK(BM_DetectorRun);

void BM_CondensationSolve(benchmark::State& state) {
  const SystemConfig c = large_config();
  const std::vector<double> log_f = opt::signomial_log_coefficients(c, 110, Beamformer::kMrc);
  for (auto _ : state) benchmark::DoNotOptimize(opt::cgp_solve(log_f, c.N, c.p_a, 0.5).value);
}
BENCHMARK(BM_CondensationSolve);

void BM_SimulatedBlock(benchmark::State& state) {
  const SystemConfig c = small_config();
  const int L = 32;
  const std::vector<double> schedule = amp::state_evolution(c, L, 0.5);
  sim::TrialOptions options;
  options.tau2 = &schedule;
  std::uint64_t index = 0;
  for (auto _ : state) {
    RngStream rng(c.seed, kTrialStreamBase + index++);
    benchmark::DoNotOptimize(sim::run_trial(c, L, 0.5, rng, options).symbol_ok);
  }
}
BENCHMARK(BM_SimulatedBlock);

}  // namespace

BENCHMARK_MAIN();
