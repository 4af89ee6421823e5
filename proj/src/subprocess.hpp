#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace veribtot::detail {

struct ExecResult {
  int exit_code = -1;
  bool timed_out = false;
  bool spawn_failed = false;
  std::string output;  // stdout and stderr, merged
  std::chrono::milliseconds duration{0};
};

/// Runs argv in `cwd` with a hard wall-clock bound; the process group is
/// SIGKILLed on timeout. Output is drained continuously so a chatty child
/// cannot deadlock on a full pipe.
ExecResult run_command(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                       std::chrono::milliseconds timeout);

/// PATH lookup for a command name (absolute/relative names are checked
/// directly).
bool command_on_path(const std::string& name);

}  // namespace veribtot::detail
