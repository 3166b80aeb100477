#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

namespace aria {

// Hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// Compact JSON with object keys in sorted order. Two encodings that differ
// only in key order map to the same string.
std::string canonical_json(const nlohmann::json& j);

// Parses a JSON text and returns the digest of its canonical form.
std::string wire_digest(std::string_view json_text);

enum class BackendKind { Llm, Retrieval, Compiler, TermIndex };
std::string_view to_string(BackendKind kind);

// Content-addressed response store. With a directory, one file per digest
// holding the raw payload; without one, entries live in memory only.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& digest) const;
  void put(const std::string& digest, const std::string& payload);
  bool erase(const std::string& digest);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::string> memory_;
};

// Append-only record log. Records are JSON objects; call records carry
// {timestamp, kind, purpose, digest, cache_hit, duration_ms, problem}.
// Every append is also written as one line to the sink file, if any.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::filesystem::path sink);

  void append(nlohmann::json record);
  void event(std::string_view name, nlohmann::json fields = nlohmann::json::object());

  // The problem tag stamped on records appended from the calling thread.
  void set_problem(std::string problem);
  std::string problem() const;

  std::vector<nlohmann::json> records() const;
  std::vector<nlohmann::json> call_records() const;

  static std::vector<nlohmann::json> load(const std::filesystem::path& path);

 private:
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> records_;
  std::map<std::thread::id, std::string> problems_;
  std::optional<std::ofstream> sink_;
};

enum class CacheMode {
  ReadWrite,   // hit returns the stored payload, miss calls the backend
  ReplayOnly,  // a miss raises CacheMiss
};

struct RetryPolicy {
  int retries = 2;
  std::chrono::milliseconds backoff{500};
};

// Shared front door for every external call: digest, cache lookup, retry on
// transport failure, and one transcript record per call.
class Gateway {
 public:
  struct Result {
    std::string payload;
    bool from_cache = false;
    std::string digest;
  };

  Gateway(ResponseCache& cache, Transcript& transcript, CacheMode mode = CacheMode::ReadWrite,
          RetryPolicy retry = {});

  // `key` must fully determine the response. `perform` may throw
  // BackendUnavailable, which is retried; other exceptions propagate.
  Result call(BackendKind kind, std::string_view purpose, const nlohmann::json& key,
              const std::function<std::string()>& perform);

  Transcript& transcript() { return transcript_; }
  ResponseCache& cache() { return cache_; }
  CacheMode mode() const { return mode_; }

 private:
  ResponseCache& cache_;
  Transcript& transcript_;
  CacheMode mode_;
  RetryPolicy retry_;
};

struct CallCounts {
  std::size_t total = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;

  friend bool operator==(const CallCounts&, const CallCounts&) = default;
};

struct CallStats {
  CallCounts total;
  std::map<std::string, CallCounts> by_kind;
  std::map<std::string, CallCounts> by_purpose;  // LLM calls only
  double cache_hit_ratio = 0.0;
  std::size_t problems = 0;
  double mean_llm_calls_per_problem = 0.0;  // LLM misses / problems
};

// Summarizes call records. The problem count is the number of distinct
// problem_begin events, falling back to distinct problem tags on calls.
CallStats call_stats(const std::vector<nlohmann::json>& records);

nlohmann::json to_json(const CallStats& stats);

}  // namespace aria
