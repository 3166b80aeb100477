#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "aria/core/types.hpp"
#include "aria/gateway.hpp"

namespace aria {

struct CompileResult {
  bool success = false;
  std::vector<Diagnostic> diagnostics;
  std::string raw_output;
  double duration_s = 0.0;
};

// Parses `file:line:col: severity: message` lines. Lines that do not match
// are folded into the previous diagnostic's message, or dropped when there
// is none.
std::vector<Diagnostic> parse_diagnostics(std::string_view raw);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

// The raw result of one compiler invocation, as cached.
struct CompilerRun {
  int exit_code = 0;
  std::string output;
  bool timed_out = false;
  double duration_s = 0.0;
};

nlohmann::json to_json(const CompilerRun& run);
CompilerRun compiler_run_from_json(const nlohmann::json& j);

class CompilerBackend {
 public:
  virtual ~CompilerBackend() = default;
  virtual std::string id() const = 0;
  // Toolchain version string, recorded in transcript headers.
  virtual std::string version() = 0;
  virtual CompilerRun run(const std::string& source, std::chrono::seconds timeout) = 0;
};

// Runs the Lean toolchain on a temporary file inside a project directory.
class LeanCompiler : public CompilerBackend {
 public:
  // `command` is split on whitespace; the file path is appended.
  LeanCompiler(std::filesystem::path project_dir, std::string command = "lake env lean");
  std::string id() const override;
  std::string version() override;
  CompilerRun run(const std::string& source, std::chrono::seconds timeout) override;

  // True when the command's executable resolves on PATH (or is a path that
  // exists).
  bool available() const;

 private:
  std::filesystem::path project_dir_;
  std::string command_;
  std::string version_;
};

// Replays an ordered queue of verdicts, one per check.
class ScriptedCompiler : public CompilerBackend {
 public:
  ScriptedCompiler() = default;
  explicit ScriptedCompiler(std::vector<CompilerRun> verdicts) : verdicts_(verdicts.begin(), verdicts.end()) {}
  ScriptedCompiler(ScriptedCompiler&& other) noexcept
      : verdicts_(std::move(other.verdicts_)), consumed_(other.consumed_) {}

  // Line-delimited JSON. {"verdict":"ok"} compiles; {"verdict":"error",
  // "line":3,"message":"..."} yields one error; {"output":"..."} supplies raw
  // compiler text verbatim. Optional "exit_code" and "timed_out".
  static ScriptedCompiler from_file(const std::filesystem::path& path);
  static CompilerRun verdict_from_json(const nlohmann::json& j);

  static CompilerRun ok();
  static CompilerRun error(int line, std::string message);

  void push(CompilerRun verdict);
  std::string id() const override { return "scripted-compiler"; }
  std::string version() override { return "scripted"; }
  CompilerRun run(const std::string& source, std::chrono::seconds timeout) override;

  std::size_t consumed() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::deque<CompilerRun> verdicts_;
  std::size_t consumed_ = 0;
};

// Checks source through the gateway with a bounded number of concurrent
// compiler invocations.
class CompilerClient {
 public:
  CompilerClient(CompilerBackend& backend, Gateway& gateway, std::chrono::seconds timeout = std::chrono::seconds(120),
                 int pool_size = 2);

  CompileResult check(const std::string& source);

  std::chrono::seconds timeout() const { return timeout_; }

 private:
  CompilerBackend& backend_;
  Gateway& gateway_;
  std::chrono::seconds timeout_;
  std::counting_semaphore<64> pool_;
};

// Classifies a run: timeouts and unexplained non-zero exits become
// synthetic error diagnostics, so success depends on diagnostics alone.
CompileResult classify(const CompilerRun& run);

}  // namespace aria
