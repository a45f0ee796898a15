#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ow {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumeric = 2, kExitCheckpoint = 3 };

struct CommandOptions {
  std::string config_path;  // empty: built-in defaults
  std::string checkpoint;   // input checkpoint
  std::string out;          // output checkpoint
  std::string metrics;      // overrides the config's metrics path
  std::string family = "table";
  std::string split = "test";  // eval only
  std::optional<std::uint64_t> seed;
  bool f64 = false;
  bool cold_start = false;
};

/// Runs one of pretrain1, pretrain2, train, eval, adapt, gradcheck, defaults.
/// Reports go to `out` as JSON, diagnostics to `err`. Returns an ExitCode.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace ow
