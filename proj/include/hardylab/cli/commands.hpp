#pragma once

// Subcommands of the hardylab executable. Exit codes: 0 pass, 1 numerical
// failure, 2 usage or config error.

#include <cstdint>
#include <optional>
#include <string>

namespace hardylab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::string filter;
  bool quiet = false;
  double tolerance_scale = 1.0;  // selftest only; hidden flag
};

int cmd_selftest(const CommandOptions& opts);
int cmd_verify(const CommandOptions& opts);
int cmd_optimality(const CommandOptions& opts);
int cmd_beta_sweep(const CommandOptions& opts);
int cmd_spectral(const CommandOptions& opts);
int cmd_certify(const CommandOptions& opts);

/// Parses argv and dispatches; never throws.
int run_cli(int argc, char** argv);

}  // namespace hardylab::cli
