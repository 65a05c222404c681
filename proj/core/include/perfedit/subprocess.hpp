#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace perfedit {

struct RunLimits {
  double wall_timeout_s = 120.0;
  std::optional<std::uint64_t> memory_bytes;  // RLIMIT_AS; unlimited if unset
  std::uint64_t max_output_bytes = 64ull << 20;  // per stream cap
};

struct RunResult {
  int exit_code = -1;  // meaningful only when exited normally
  bool exited = false;
  bool timed_out = false;
  bool signaled = false;
  int term_signal = 0;
  bool output_truncated = false;  // stream cap hit; process was killed
  std::string out;
  std::string err;
  double wall_seconds = 0.0;

  bool success() const {
    return exited && exit_code == 0 && !timed_out && !output_truncated;
  }
};

/// Runs argv[0] with the given arguments, feeding stdin_bytes and capturing
/// both output streams. The child gets its own process group and is killed
/// as a group on timeout or output-cap violation. Throws std::runtime_error
/// only for harness-level failures (fork/pipe); child failures are reported
/// in the result.
RunResult run_process(const std::vector<std::string>& argv,
                      std::string_view stdin_bytes, const RunLimits& limits,
                      const std::filesystem::path& workdir = {});

/// Splits a command template into argv tokens. Whitespace separates tokens;
/// single or double quotes group them. Throws on unbalanced quotes or an
/// empty command.
std::vector<std::string> split_command(std::string_view command);

/// Replaces {name} placeholders in every token. Unknown placeholders are
/// left untouched.
std::vector<std::string> substitute_placeholders(
    std::vector<std::string> argv,
    const std::vector<std::pair<std::string, std::string>>& replacements);

}  // namespace perfedit
