#include "sstr/experiment.hpp"

#include <array>
#include <cctype>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "sstr/errors.hpp"
#include "sstr/simulator.hpp"

namespace sstr::experiment {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_number(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.10g", v);
  return buffer;
}

struct Entry {
  int line = 0;
  std::string value;
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "N",           "M",         "T",          "p_a",         "gamma",
      "snr_db",      "sigma2",    "W",          "amp_iters",   "se_samples",
      "seed",        "amp_threshold", "amp_empirical_tau",     "command",
      "beamformer",  "epsilon",   "L",          "trials",      "sweep",
      "sweep_values", "optimize", "restarts",   "grid_size",   "use_mean_approx",
      "condition_k", "fixed_pilot_book", "report_runtime",     "output"};
  return keys;
}

/// Raw key -> value table with duplicate/unknown-key rejection.
std::map<std::string, Entry> tokenize(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (known_keys().count(key) == 0) throw ParseError(line_no, "unknown key '" + key + "'");
    if (entries.count(key) != 0) throw ParseError(line_no, "duplicate key '" + key + "'");
    if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
    entries[key] = {line_no, value};
  }
  return entries;
}

double to_double(const Entry& e, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end != e.value.c_str() + e.value.size() || !std::isfinite(v))
    throw ParseError(e.line, "value of '" + key + "' is not a finite number");
  return v;
}

int to_int(const Entry& e, const std::string& key) {
  char* end = nullptr;
  const long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (end != e.value.c_str() + e.value.size())
    throw ParseError(e.line, "value of '" + key + "' is not an integer");
  if (v < INT_MIN || v > INT_MAX) throw ParseError(e.line, "value of '" + key + "' overflows");
  return static_cast<int>(v);
}

std::uint64_t to_u64(const Entry& e, const std::string& key) {
  if (!e.value.empty() && e.value.front() == '-')
    throw ParseError(e.line, "value of '" + key + "' must be a nonnegative integer");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
  if (end != e.value.c_str() + e.value.size())
    throw ParseError(e.line, "value of '" + key + "' is not an integer");
  return v;
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  throw ParseError(e.line, "value of '" + key + "' must be true/false/1/0");
}

std::vector<double> to_value_list(const Entry& e) {
  std::vector<double> values;
  const auto parse_one = [&](const std::string& piece) {
    char* end = nullptr;
    const double v = std::strtod(piece.c_str(), &end);
    if (piece.empty() || end != piece.c_str() + piece.size() || !std::isfinite(v))
      throw ParseError(e.line, "sweep_values entry '" + piece + "' is not a finite number");
    return v;
  };
  if (e.value.find(':') != std::string::npos) {
    // start:step:stop, inclusive of stop up to rounding slack.
    std::array<std::string, 3> parts;
    std::size_t begin = 0;
    for (int i = 0; i < 3; ++i) {
      const auto colon = e.value.find(':', begin);
      if ((i < 2) == (colon == std::string::npos))
        throw ParseError(e.line, "range syntax is start:step:stop");
      parts[static_cast<std::size_t>(i)] =
          trim(e.value.substr(begin, colon == std::string::npos ? std::string::npos
                                                                : colon - begin));
      begin = colon + 1;
    }
    const double start = parse_one(parts[0]);
    const double step = parse_one(parts[1]);
    const double stop = parse_one(parts[2]);
    if (step == 0.0) throw ParseError(e.line, "range step must be nonzero");
    const double span = (stop - start) / step;
    if (span < -1e-9) throw ParseError(e.line, "range never reaches stop");
    const long long count = static_cast<long long>(std::floor(span + 1e-9)) + 1;
    if (count > 1000000) throw ParseError(e.line, "range yields too many values");
    for (long long i = 0; i < count; ++i)
      values.push_back(start + static_cast<double>(i) * step);
  } else {
    std::size_t begin = 0;
    while (begin <= e.value.size()) {
      const auto comma = e.value.find(',', begin);
      const std::string piece =
          trim(e.value.substr(begin, comma == std::string::npos ? std::string::npos
                                                                : comma - begin));
      values.push_back(parse_one(piece));
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
  }
  if (values.empty()) throw ParseError(e.line, "sweep_values is empty");
  return values;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool sweep_needs_integers(SweepParameter p) {
  return p == SweepParameter::kN || p == SweepParameter::kM || p == SweepParameter::kT ||
         p == SweepParameter::kL || p == SweepParameter::kW;
}

const char* sweep_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kN: return "N";
    case SweepParameter::kM: return "M";
    case SweepParameter::kT: return "T";
    case SweepParameter::kPa: return "p_a";
    case SweepParameter::kEpsilon: return "epsilon";
    case SweepParameter::kL: return "L";
    case SweepParameter::kSnrDb: return "snr_db";
    case SweepParameter::kW: return "W";
    case SweepParameter::kNone: break;
  }
  return "none";
}

int integral_value(double v, const char* what) {
  const double rounded = std::round(v);
  if (std::abs(v - rounded) > 1e-9)
    throw OutOfRange(what, "needs integer values");
  return static_cast<int>(rounded);
}

/// Returns a copy of `base` with the swept parameter set to `value`.
ExperimentSpec apply_sweep(const ExperimentSpec& base, double value) {
  ExperimentSpec spec = base;
  switch (spec.sweep) {
    case SweepParameter::kN: spec.config.N = integral_value(value, "sweep_values"); break;
    case SweepParameter::kM: spec.config.M = integral_value(value, "sweep_values"); break;
    case SweepParameter::kT: spec.config.T = integral_value(value, "sweep_values"); break;
    case SweepParameter::kPa: spec.config.p_a = value; break;
    case SweepParameter::kEpsilon: spec.epsilon = value; break;
    case SweepParameter::kL: spec.L = integral_value(value, "sweep_values"); break;
    case SweepParameter::kSnrDb:
      spec.config.gamma = spec.config.sigma2 * std::pow(10.0, value / 10.0);
      break;
    case SweepParameter::kW: spec.config.W = integral_value(value, "sweep_values"); break;
    case SweepParameter::kNone: break;
  }
  return spec;
}

/// One data row of the analytic/simulate/sweep CSV.
std::string make_point_row(const ExperimentSpec& spec, double sweep_value, int threads) {
  const auto row_start = Clock::now();
  const SystemConfig& config = validate_config(spec.config);
  if (spec.L < 1 || spec.L > config.T - 1)
    throw OutOfRange("L", "pilot length must leave at least one payload slot");
  if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0))
    throw OutOfRange("epsilon", "must lie in [0, 1]");
  const double prefactor =
      static_cast<double>(config.T - spec.L) / static_cast<double>(config.T);

  std::array<std::string, 8> cell;  // matches kCsvHeader
  cell.fill("");
  cell[0] = format_number(sweep_value);

  if (spec.condition_k >= 0) {
    // Conditioned on a fixed active count: report the per-user success rate
    // at exactly that load; the mean-load columns carry the load itself.
    const double k = spec.condition_k;
    const double p_miss = miss_probability(k, spec.L, config.M, config.gamma, config.sigma2);
    const double psi =
        ser_regime(spec.beamformer, config.W, k, spec.L, config.M, config.gamma, config.sigma2);
    cell[1] = format_number(prefactor * (1.0 - p_miss) * (1.0 - psi));
    cell[5] = format_number(p_miss);
    cell[6] = format_number(psi);
  } else {
    cell[1] = format_number(sstr_exact(config, spec.L, spec.epsilon, spec.beamformer).value);
    try {
      cell[2] =
          format_number(sstr_mean_approx(config, spec.L, spec.epsilon, spec.beamformer).value);
      const double kb = k_bar(config, spec.L, spec.epsilon);
      cell[5] = format_number(miss_probability(kb, spec.L, config.M, config.gamma, config.sigma2));
      cell[6] = format_number(
          ser_regime(spec.beamformer, config.W, kb, spec.L, config.M, config.gamma, config.sigma2));
    } catch (const DegenerateDistribution&) {
      // No detectable load: the mean-load summary columns stay empty.
    }
  }

  if (spec.trials >= 2) {
    sim::TrialOptions options;
    options.beamformer = spec.beamformer;
    options.condition_k = spec.condition_k;
    PilotBook book;
    if (spec.fixed_pilot_book) {
      RngStream pilot_rng(config.seed, kPilotBookStream);
      book = draw_pilots(pilot_rng, spec.L, config.N);
      options.fixed_pilots = &book;
    }
    const sim::TrialBatch batch =
        sim::run_trials(config, spec.L, spec.epsilon, spec.trials, options, threads);
    const SstrPoint mc = spec.condition_k >= 0 ? sim::empirical_user_rate(batch, config)
                                               : sim::empirical_sstr(batch, config);
    cell[3] = format_number(mc.value);
    cell[4] = format_number(mc.half_width);
  }

  if (spec.report_runtime) cell[7] = format_number(seconds_since(row_start));

  std::string row = cell[0];
  for (std::size_t i = 1; i < cell.size(); ++i) {
    row += ',';
    row += cell[i];
  }
  return row;
}

std::string make_optimize_csv(const ExperimentSpec& spec, int threads) {
  opt::OptResult result;
  switch (spec.optimize) {
    case OptimizeTarget::kEpsilon:
      result = opt::optimize_epsilon_cgp(spec.config, spec.L, spec.beamformer, spec.restarts);
      break;
    case OptimizeTarget::kLength:
      result = opt::optimize_length(spec.config, spec.epsilon, spec.beamformer,
                                    spec.use_mean_approx);
      break;
    case OptimizeTarget::kJoint:
      result = opt::optimize_joint(spec.config, spec.beamformer, spec.restarts,
                                   spec.grid_size, threads);
      break;
    case OptimizeTarget::kNone:
      throw OutOfRange("optimize", "optimize command needs an optimize target");
  }
  std::string csv = "epsilon_opt,L_opt,value,method,restarts\n";
  csv += result.epsilon_opt ? format_number(*result.epsilon_opt) : "";
  csv += ',';
  csv += result.L_opt ? std::to_string(*result.L_opt) : "";
  csv += ',';
  csv += format_number(result.value);
  csv += ',';
  csv += opt::to_string(result.method);
  csv += ',';
  csv += std::to_string(result.diagnostics.restarts);
  csv += '\n';
  return csv;
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text) {
  const std::map<std::string, Entry> entries = tokenize(text);
  const auto find = [&](const char* key) -> const Entry* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  const auto require = [&](const char* key) -> const Entry& {
    const Entry* e = find(key);
    if (!e) throw ParseError(std::string("missing required key '") + key + "'");
    return *e;
  };

  ExperimentSpec spec;

  const Entry& command = require("command");
  const std::string command_name = lower(command.value);
  if (command_name == "analytic") spec.command = Command::kAnalytic;
  else if (command_name == "simulate") spec.command = Command::kSimulate;
  else if (command_name == "sweep") spec.command = Command::kSweep;
  else if (command_name == "optimize") spec.command = Command::kOptimize;
  else throw ParseError(command.line, "command must be analytic, simulate, sweep or optimize");

  spec.config.N = to_int(require("N"), "N");
  spec.config.M = to_int(require("M"), "M");
  spec.config.T = to_int(require("T"), "T");
  spec.config.p_a = to_double(require("p_a"), "p_a");
  if (const Entry* e = find("sigma2")) spec.config.sigma2 = to_double(*e, "sigma2");
  const Entry* gamma = find("gamma");
  const Entry* snr_db = find("snr_db");
  if (gamma && snr_db)
    throw ParseError(snr_db->line, "keys gamma and snr_db are mutually exclusive");
  if (gamma) spec.config.gamma = to_double(*gamma, "gamma");
  if (snr_db)
    spec.config.gamma = spec.config.sigma2 * std::pow(10.0, to_double(*snr_db, "snr_db") / 10.0);
  if (const Entry* e = find("W")) spec.config.W = to_int(*e, "W");
  if (const Entry* e = find("amp_iters")) spec.config.amp_iters = to_int(*e, "amp_iters");
  if (const Entry* e = find("se_samples")) spec.config.se_samples = to_int(*e, "se_samples");
  if (const Entry* e = find("seed")) spec.config.seed = to_u64(*e, "seed");
  if (const Entry* e = find("amp_threshold"))
    spec.config.amp_threshold = to_double(*e, "amp_threshold");
  if (const Entry* e = find("amp_empirical_tau"))
    spec.config.amp_empirical_tau = to_bool(*e, "amp_empirical_tau");

  if (const Entry* e = find("beamformer")) {
    const std::string name = lower(e->value);
    if (name == "mrc") spec.beamformer = Beamformer::kMrc;
    else if (name == "zf") spec.beamformer = Beamformer::kZf;
    else throw ParseError(e->line, "beamformer must be mrc or zf");
  }
  if (const Entry* e = find("epsilon")) spec.epsilon = to_double(*e, "epsilon");
  if (const Entry* e = find("L")) spec.L = to_int(*e, "L");
  if (const Entry* e = find("trials")) spec.trials = to_int(*e, "trials");
  if (const Entry* e = find("restarts")) spec.restarts = to_int(*e, "restarts");
  if (const Entry* e = find("grid_size")) spec.grid_size = to_int(*e, "grid_size");
  if (const Entry* e = find("use_mean_approx"))
    spec.use_mean_approx = to_bool(*e, "use_mean_approx");
  if (const Entry* e = find("condition_k")) spec.condition_k = to_int(*e, "condition_k");
  if (const Entry* e = find("fixed_pilot_book"))
    spec.fixed_pilot_book = to_bool(*e, "fixed_pilot_book");
  if (const Entry* e = find("report_runtime"))
    spec.report_runtime = to_bool(*e, "report_runtime");
  if (const Entry* e = find("output")) spec.output = e->value;

  if (const Entry* e = find("sweep")) {
    if (e->value == "N") spec.sweep = SweepParameter::kN;
    else if (e->value == "M") spec.sweep = SweepParameter::kM;
    else if (e->value == "T") spec.sweep = SweepParameter::kT;
    else if (e->value == "p_a") spec.sweep = SweepParameter::kPa;
    else if (e->value == "epsilon") spec.sweep = SweepParameter::kEpsilon;
    else if (e->value == "L") spec.sweep = SweepParameter::kL;
    else if (e->value == "snr_db") spec.sweep = SweepParameter::kSnrDb;
    else if (e->value == "W") spec.sweep = SweepParameter::kW;
    else throw ParseError(e->line, "sweep must name one of N, M, T, p_a, epsilon, L, snr_db, W");
  }
  if (const Entry* e = find("sweep_values")) spec.sweep_values = to_value_list(*e);

  if (const Entry* e = find("optimize")) {
    const std::string name = e->value;
    if (name == "epsilon") spec.optimize = OptimizeTarget::kEpsilon;
    else if (name == "L") spec.optimize = OptimizeTarget::kLength;
    else if (name == "joint") spec.optimize = OptimizeTarget::kJoint;
    else throw ParseError(e->line, "optimize must be epsilon, L or joint");
  }

  // Cross-field validation.
  validate_config(spec.config);
  if (spec.command == Command::kSweep) {
    if (spec.sweep == SweepParameter::kNone)
      throw ParseError("sweep command needs the 'sweep' key");
    if (spec.sweep_values.empty())
      throw ParseError("sweep command needs the 'sweep_values' key");
    if (sweep_needs_integers(spec.sweep))
      for (const double v : spec.sweep_values) integral_value(v, "sweep_values");
  } else if (!spec.sweep_values.empty() || spec.sweep != SweepParameter::kNone) {
    throw ParseError("sweep keys are only valid with the sweep command");
  }
  if (spec.command == Command::kOptimize) {
    if (spec.optimize == OptimizeTarget::kNone)
      throw ParseError("optimize command needs the 'optimize' key");
    if (spec.restarts < 1) throw OutOfRange("restarts", "need at least one restart");
    if (spec.grid_size < 3) throw OutOfRange("grid_size", "need at least three grid points");
  } else if (spec.optimize != OptimizeTarget::kNone) {
    throw ParseError("the 'optimize' key is only valid with the optimize command");
  }

  const bool needs_epsilon =
      spec.command == Command::kAnalytic || spec.command == Command::kSimulate ||
      (spec.command == Command::kSweep && spec.sweep != SweepParameter::kEpsilon) ||
      (spec.command == Command::kOptimize && spec.optimize == OptimizeTarget::kLength);
  const bool needs_length =
      spec.command == Command::kAnalytic || spec.command == Command::kSimulate ||
      (spec.command == Command::kSweep && spec.sweep != SweepParameter::kL) ||
      (spec.command == Command::kOptimize && spec.optimize == OptimizeTarget::kEpsilon);
  if (needs_epsilon && !find("epsilon"))
    throw ParseError("this command needs the 'epsilon' key");
  if (needs_length && !find("L")) throw ParseError("this command needs the 'L' key");
  if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0))
    throw OutOfRange("epsilon", "must lie in [0, 1]");
  if (find("L") && (spec.L < 1 || spec.L > spec.config.T - 1))
    throw OutOfRange("L", "pilot length must leave at least one payload slot");

  if (spec.command == Command::kSimulate && spec.trials < 2)
    throw OutOfRange("trials", "simulate needs at least two trials for a confidence interval");
  if (spec.command == Command::kSweep && spec.trials != 0 && spec.trials < 2)
    throw OutOfRange("trials", "sweep trials must be 0 (analytic only) or at least 2");
  if (spec.trials < 0) throw OutOfRange("trials", "must be nonnegative");
  if (spec.condition_k < -1) throw OutOfRange("condition_k", "must be -1 (off) or nonnegative");
  if (spec.condition_k > spec.config.N)
    throw OutOfRange("condition_k", "cannot exceed the user count");
  return spec;
}

RunOutput execute(const ExperimentSpec& spec, int threads) {
  const auto start = Clock::now();
  RunOutput out;
  switch (spec.command) {
    case Command::kAnalytic: {
      ExperimentSpec point = spec;
      point.trials = 0;  // closed-form only, regardless of a trials key
      out.csv = std::string(kCsvHeader) + "\n" +
                make_point_row(point, point.epsilon, threads) + "\n";
      out.rows = 1;
      break;
    }
    case Command::kSimulate: {
      out.csv = std::string(kCsvHeader) + "\n" + make_point_row(spec, spec.epsilon, threads) +
                "\n";
      out.rows = 1;
      break;
    }
    case Command::kSweep: {
      out.csv = std::string(kCsvHeader) + "\n";
      for (const double value : spec.sweep_values) {
        out.csv += make_point_row(apply_sweep(spec, value), value, threads);
        out.csv += '\n';
        ++out.rows;
      }
      break;
    }
    case Command::kOptimize: {
      out.csv = make_optimize_csv(spec, threads);
      out.rows = 1;
      break;
    }
  }
  out.wall_time_s = seconds_since(start);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace sstr::experiment
