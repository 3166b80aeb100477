#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace aria {

struct ProcessResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr, interleaved
  bool timed_out = false;
  double duration_s = 0.0;
};

// Runs argv[0] (PATH lookup) with `input` on stdin. The child is killed
// once `timeout` elapses. Throws BackendUnavailable when the program cannot
// be started.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout, const std::filesystem::path& cwd = {});

// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace aria
