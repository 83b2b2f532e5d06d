#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qdict {

/// Peak resident set size of the calling process, in bytes (OS accounting).
std::uint64_t peak_rss_bytes();

/// User + system CPU time of the calling process, in seconds.
double cpu_seconds();

/// Path of the running executable.
std::string self_executable();

struct ProcessResult {
  int exit_code = -1;
  std::string out;                 // captured stdout
  std::uint64_t peak_rss_bytes = 0;  // wait4 ru_maxrss: on Linux never below the parent's own peak
  double wall_seconds = 0.0;
};

/// Spawns argv[0] with the given arguments, waits for it and reports the
/// child's own peak RSS.
ProcessResult run_process(const std::vector<std::string>& argv, bool capture_stdout = true);

}  // namespace qdict
