#include "aria/compiler.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "aria/errors.hpp"
#include "aria/process.hpp"

namespace aria {

using nlohmann::json;

namespace {

std::optional<Severity> severity_from(std::string_view word) {
  if (word == "error") return Severity::Error;
  if (word == "warning") return Severity::Warning;
  if (word == "info" || word == "information" || word == "note") return Severity::Info;
  return std::nullopt;
}

}  // namespace

std::vector<Diagnostic> parse_diagnostics(std::string_view raw) {
  static const std::regex head(R"(^(.+?):(\d+):(\d+):\s*(error|warning|info|information|note):\s?(.*)$)");
  std::vector<Diagnostic> out;
  std::istringstream in{std::string(raw)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, head)) {
      Diagnostic d;
      d.severity = *severity_from(m[4].str());
      d.line = std::max(1, std::stoi(m[2].str()));
      d.column = std::max(0, std::stoi(m[3].str()));
      d.message = m[5].str();
      out.push_back(std::move(d));
    } else if (!out.empty()) {
      std::string cont = trim(line);
      if (cont.empty()) continue;
      if (!out.back().message.empty()) out.back().message += "\n";
      out.back().message += cont;
    }
  }
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  for (const auto& d : diagnostics)
    if (d.severity == Severity::Error) return true;
  return false;
}

json to_json(const CompilerRun& run) {
  return {{"exit_code", run.exit_code}, {"output", run.output}, {"timed_out", run.timed_out},
          {"duration_s", run.duration_s}};
}

CompilerRun compiler_run_from_json(const json& j) {
  try {
    CompilerRun r;
    r.exit_code = j.value("exit_code", 0);
    r.output = j.value("output", "");
    r.timed_out = j.value("timed_out", false);
    r.duration_s = j.value("duration_s", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("compiler payload: ") + e.what());
  }
}

CompileResult classify(const CompilerRun& run) {
  CompileResult r;
  r.raw_output = run.output;
  r.duration_s = run.duration_s;
  r.diagnostics = parse_diagnostics(run.output);
  if (run.timed_out) {
    r.diagnostics.push_back({Severity::Error, 1, 0, "timeout"});
  } else if (run.exit_code != 0 && !has_errors(r.diagnostics)) {
    r.diagnostics.push_back({Severity::Error, 1, 0, "compiler exited with status " + std::to_string(run.exit_code)});
  }
  r.success = !has_errors(r.diagnostics);
  return r;
}

// LeanCompiler

LeanCompiler::LeanCompiler(std::filesystem::path project_dir, std::string command)
    : project_dir_(std::move(project_dir)), command_(std::move(command)) {}

std::string LeanCompiler::id() const { return "lean:" + command_ + "@" + project_dir_.string(); }

bool LeanCompiler::available() const {
  auto argv = split_command(command_);
  if (argv.empty()) return false;
  const std::string& exe = argv.front();
  if (exe.find('/') != std::string::npos) return std::filesystem::exists(exe);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    std::error_code ec;
    if (std::filesystem::exists(std::filesystem::path(dir) / exe, ec)) return true;
  }
  return false;
}

std::string LeanCompiler::version() {
  if (!version_.empty()) return version_;
  auto argv = split_command(command_);
  argv.push_back("--version");
  try {
    auto r = run_process(argv, "", std::chrono::seconds(60), project_dir_);
    version_ = trim(r.output);
  } catch (const BackendUnavailable&) {
    version_ = "unavailable";
  }
  return version_;
}

CompilerRun LeanCompiler::run(const std::string& source, std::chrono::seconds timeout) {
  if (!std::filesystem::is_directory(project_dir_))
    throw BackendUnavailable("lean project directory not found: " + project_dir_.string());
  std::random_device rd;
  auto file = project_dir_ / ("AriaCheck_" + std::to_string(rd()) + ".lean");
  {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw BackendUnavailable("cannot write " + file.string());
    out << source;
  }
  auto argv = split_command(command_);
  argv.push_back(file.filename().string());
  ProcessResult p;
  try {
    p = run_process(argv, "", timeout, project_dir_);
  } catch (...) {
    std::filesystem::remove(file);
    throw;
  }
  std::filesystem::remove(file);
  return {p.exit_code, p.output, p.timed_out, p.duration_s};
}

// ScriptedCompiler

CompilerRun ScriptedCompiler::ok() { return {}; }

CompilerRun ScriptedCompiler::error(int line, std::string message) {
  CompilerRun r;
  r.exit_code = 1;
  r.output = "scripted.lean:" + std::to_string(line) + ":0: error: " + message + "\n";
  return r;
}

CompilerRun ScriptedCompiler::verdict_from_json(const json& j) {
  CompilerRun r;
  if (j.contains("output")) {
    r.output = j.at("output").get<std::string>();
    r.exit_code = j.value("exit_code", has_errors(parse_diagnostics(r.output)) ? 1 : 0);
  } else {
    std::string verdict = j.value("verdict", "ok");
    if (verdict == "ok")
      r = ok();
    else if (verdict == "error")
      r = error(j.value("line", 1), j.value("message", "scripted failure"));
    else
      throw MalformedResponse("unknown scripted verdict '" + verdict + "'");
    if (j.contains("exit_code")) r.exit_code = j.at("exit_code").get<int>();
  }
  r.timed_out = j.value("timed_out", false);
  return r;
}

ScriptedCompiler ScriptedCompiler::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendUnavailable("cannot read compiler script " + path.string());
  ScriptedCompiler s;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      s.verdicts_.push_back(verdict_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw MalformedResponse(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return s;
}

void ScriptedCompiler::push(CompilerRun verdict) {
  std::lock_guard lock(mutex_);
  verdicts_.push_back(std::move(verdict));
}

CompilerRun ScriptedCompiler::run(const std::string&, std::chrono::seconds) {
  std::lock_guard lock(mutex_);
  if (verdicts_.empty()) throw BackendUnavailable("scripted compiler exhausted");
  CompilerRun r = std::move(verdicts_.front());
  verdicts_.pop_front();
  ++consumed_;
  return r;
}

std::size_t ScriptedCompiler::consumed() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

std::size_t ScriptedCompiler::remaining() const {
  std::lock_guard lock(mutex_);
  return verdicts_.size();
}

// CompilerClient

CompilerClient::CompilerClient(CompilerBackend& backend, Gateway& gateway, std::chrono::seconds timeout,
                               int pool_size)
    : backend_(backend), gateway_(gateway), timeout_(timeout), pool_(std::clamp(pool_size, 1, 64)) {
  if (timeout.count() <= 0) throw std::invalid_argument("compiler timeout must be positive");
}

CompileResult CompilerClient::check(const std::string& source) {
  json key = {{"kind", "compile"}, {"backend", backend_.id()}, {"source", source}};
  auto result = gateway_.call(BackendKind::Compiler, "check", key, [&] {
    pool_.acquire();
    try {
      auto run = backend_.run(source, timeout_);
      pool_.release();
      return to_json(run).dump();
    } catch (...) {
      pool_.release();
      throw;
    }
  });
  json payload;
  try {
    payload = json::parse(result.payload);
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("compiler payload: ") + e.what());
  }
  return classify(compiler_run_from_json(payload));
}

}  // namespace aria
