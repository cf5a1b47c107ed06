#include "sstr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sstr/errors.hpp"

namespace sstr {
namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

SystemConfig validate_config(const SystemConfig& raw) {
  if (raw.N < 1) throw OutOfRange("N", "need at least one user");
  if (raw.M < 1) throw OutOfRange("M", "need at least one antenna");
  if (raw.T < 2) throw OutOfRange("T", "frame must fit a pilot and a data symbol");
  if (!(raw.p_a >= 0.0 && raw.p_a <= 1.0)) throw OutOfRange("p_a", "must lie in [0, 1]");
  if (!finite_positive(raw.gamma)) throw OutOfRange("gamma", "must be finite and > 0");
  if (!finite_positive(raw.sigma2)) throw OutOfRange("sigma2", "must be finite and > 0");
  if (raw.W != 2 && raw.W != 4) throw OutOfRange("W", "PSK order must be 2 or 4");
  if (raw.amp_iters < 1) throw OutOfRange("amp_iters", "need at least one iteration");
  if (raw.se_samples < 1) throw OutOfRange("se_samples", "need at least one sample");
  if (!(raw.amp_threshold > 0.0 && raw.amp_threshold <= 1.0))
    throw OutOfRange("amp_threshold", "must lie in (0, 1]");
  return raw;
}

std::vector<double> power_control(const std::vector<double>& gains, double gamma) {
  if (!finite_positive(gamma)) throw OutOfRange("gamma", "must be finite and > 0");
  std::vector<double> rho(gains.size());
  for (std::size_t n = 0; n < gains.size(); ++n) {
    if (!finite_positive(gains[n]))
      throw OutOfRange("gains[" + std::to_string(n) + "]", "must be finite and > 0");
    rho[n] = gamma / gains[n];
  }
  return rho;
}

ActivityVector draw_activity(RngStream& rng, int n_users, double p_a, double epsilon) {
  if (n_users < 1) throw OutOfRange("n_users", "need at least one user");
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw OutOfRange("p_a", "must lie in [0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw OutOfRange("epsilon", "must lie in [0, 1]");
  const double lambda = p_a * epsilon;
  ActivityVector alpha(static_cast<std::size_t>(n_users));
  for (auto& a : alpha) a = rng.bernoulli(lambda) ? 1 : 0;
  return alpha;
}

ActivityVector draw_activity_conditioned(RngStream& rng, int n_users, int k_active) {
  if (n_users < 1) throw OutOfRange("n_users", "need at least one user");
  if (k_active < 0 || k_active > n_users)
    throw OutOfRange("k_active", "must lie in [0, n_users]");
  // Partial Fisher-Yates: the first k_active slots of a shuffled index list.
  std::vector<int> idx(static_cast<std::size_t>(n_users));
  std::iota(idx.begin(), idx.end(), 0);
  ActivityVector alpha(static_cast<std::size_t>(n_users), 0);
  for (int i = 0; i < k_active; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_users - i)));
    std::swap(idx[i], idx[j]);
    alpha[static_cast<std::size_t>(idx[i])] = 1;
  }
  return alpha;
}

PilotBook draw_pilots(RngStream& rng, int length, int n_users) {
  if (length < 1) throw OutOfRange("length", "pilot length must be >= 1");
  if (n_users < 1) throw OutOfRange("n_users", "need at least one user");
  PilotBook a(length, n_users);
  const double entry_var = 1.0 / static_cast<double>(length);
  for (int n = 0; n < n_users; ++n)
    for (int l = 0; l < length; ++l) a(l, n) = rng.cgaussian(entry_var);
  return a;
}

ChannelSet draw_channels(RngStream& rng, int n_antennas, const std::vector<double>& gains) {
  if (n_antennas < 1) throw OutOfRange("n_antennas", "need at least one antenna");
  if (gains.empty()) throw OutOfRange("gains", "need at least one user");
  ChannelSet channels;
  channels.gains = gains;
  channels.h.resize(n_antennas, static_cast<Eigen::Index>(gains.size()));
  for (std::size_t n = 0; n < gains.size(); ++n) {
    if (!finite_positive(gains[n]))
      throw OutOfRange("gains[" + std::to_string(n) + "]", "must be finite and > 0");
    for (int m = 0; m < n_antennas; ++m)
      channels.h(m, static_cast<Eigen::Index>(n)) = rng.cgaussian(gains[n]);
  }
  return channels;
}

int active_count(const ActivityVector& activity) {
  return static_cast<int>(std::count(activity.begin(), activity.end(), 1));
}

}  // namespace sstr
