#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sstr/errors.hpp"
#include "sstr/experiment.hpp"
#include "sstr/version.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

int fail(const char* kind, const std::string& message, int code) {
  const nlohmann::json record{{"error", message}, {"kind", kind}};
  std::cerr << record.dump() << "\n";
  return code;
}

const char* command_name(sstr::experiment::Command c) {
  switch (c) {
    case sstr::experiment::Command::kAnalytic: return "analytic";
    case sstr::experiment::Command::kSimulate: return "simulate";
    case sstr::experiment::Command::kSweep: return "sweep";
    case sstr::experiment::Command::kOptimize: return "optimize";
  }
  return "unknown";
}

std::string hex64(std::uint64_t v) {
  char buffer[19];
  std::snprintf(buffer, sizeof(buffer), "0x%016llx", static_cast<unsigned long long>(v));
  return buffer;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successful-symbol-transmission-rate toolkit for grant-free massive access"};
  app.set_version_flag("--version", std::string(sstr::kVersion));
  app.require_subcommand(1);

  std::string spec_path;
  std::optional<std::uint64_t> seed_override;
  std::string out_override;
  int threads = 1;
  for (const char* name : {"analytic", "simulate", "sweep", "optimize"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--spec", spec_path, "experiment spec file (key = value lines)")
        ->required();
    sub->add_option("--seed", seed_override, "override the spec's RNG seed");
    sub->add_option("--out", out_override, "write CSV here (plus <out>.manifest.json)");
    sub->add_option("--threads", threads, "worker threads for Monte-Carlo batches")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::ostringstream message;
    message << e.what();
    return fail("validation", message.str(), kExitValidation);
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  std::string spec_text;
  {
    std::ifstream in(spec_path, std::ios::binary);
    if (!in) return fail("validation", "cannot read spec file: " + spec_path, kExitValidation);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    spec_text = buffer.str();
  }

  sstr::experiment::ExperimentSpec spec;
  try {
    spec = sstr::experiment::parse_spec(spec_text);
  } catch (const sstr::ParseError& e) {
    return fail("validation", e.what(), kExitValidation);
  } catch (const sstr::OutOfRange& e) {
    return fail("validation", e.what(), kExitValidation);
  }
  if (subcommand != command_name(spec.command))
    return fail("validation",
                "spec declares command '" + std::string(command_name(spec.command)) +
                    "' but the CLI was invoked with '" + subcommand + "'",
                kExitValidation);
  if (seed_override) spec.config.seed = *seed_override;
  const std::string out_path = out_override.empty() ? spec.output : out_override;

  sstr::experiment::RunOutput run;
  try {
    run = sstr::experiment::execute(spec, threads);
  } catch (const sstr::ParseError& e) {
    return fail("validation", e.what(), kExitValidation);
  } catch (const sstr::OutOfRange& e) {
    return fail("validation", e.what(), kExitValidation);
  } catch (const sstr::ShapeMismatch& e) {
    return fail("validation", e.what(), kExitValidation);
  } catch (const sstr::Error& e) {
    return fail("numerical", e.what(), kExitNumerical);
  } catch (const std::exception& e) {
    return fail("numerical", e.what(), kExitNumerical);
  }

  if (out_path.empty()) {
    std::cout << run.csv;
    return 0;
  }
  {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) return fail("validation", "cannot write: " + out_path, kExitValidation);
    out << run.csv;
  }
  nlohmann::json manifest{{"tool_version", std::string(sstr::kVersion)},
                          {"command", subcommand},
                          {"seed", spec.config.seed},
                          {"spec_fnv1a64", hex64(sstr::experiment::fnv1a64(spec_text))},
                          {"csv_path", out_path},
                          {"rows", run.rows},
                          {"wall_time_s", run.wall_time_s}};
  const std::string manifest_path = out_path + ".manifest.json";
  {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) return fail("validation", "cannot write: " + manifest_path, kExitValidation);
    out << manifest.dump(2) << "\n";
  }
  return 0;
}
