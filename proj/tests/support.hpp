#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aria/compiler.hpp"
#include "aria/gateway.hpp"
#include "aria/llm.hpp"

namespace aria::test {

inline std::filesystem::path fixtures() { return ARIA_FIXTURES; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "aria") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// In-memory cache + transcript + gateway, with scripted LLM and compiler.
struct Stack {
  ResponseCache cache;
  Transcript transcript;
  Gateway gateway{cache, transcript, CacheMode::ReadWrite, RetryPolicy{0, std::chrono::milliseconds(0)}};
  ScriptedLlm llm_backend;
  ScriptedCompiler compiler_backend;
  LlmClient llm{llm_backend, gateway};
  CompilerClient compiler{compiler_backend, gateway};

  std::size_t count(std::string_view kind, std::string_view purpose = {}) const {
    std::size_t n = 0;
    for (const auto& r : transcript.call_records())
      if (r.value("kind", "") == kind && (purpose.empty() || r.value("purpose", "") == purpose)) ++n;
    return n;
  }
};

inline std::string lean_reply(const std::string& code) { return "Here it is.\n\n```lean\n" + code + "\n```\n"; }

}  // namespace aria::test
