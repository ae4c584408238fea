#pragma once

// Config-driven dispatcher behind the kinreg executable.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace kinreg::cli {

/// Command-line overrides for the lpa subcommand.
struct LpaFlags {
  std::optional<double> r;
  std::optional<int> jmin;
  std::optional<int> jmax;
  std::optional<std::array<double, 2>> seminorm;  ///< {s, q}
  std::optional<double> window;                   ///< cutoff margin
};

struct RunConfig {
  std::string subcommand;  ///< exponents | nondeg | lpa | claw solve | claw pipeline
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  bool verify = false;
  LpaFlags lpa;
};

enum ExitCode : int { kOk = 0, kError = 1, kInfeasible = 2 };

/// Parses the config, computes, then writes manifest.json, result.json and
/// the CSV/binary artifacts. Nothing is written when parsing or computing
/// fails. Diagnostics go to err.
int run(const RunConfig& config, std::ostream& err);

}  // namespace kinreg::cli
