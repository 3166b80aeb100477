#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace aria {

// Every knob of a run. Loaded from a `key = value` file (`#` starts a
// comment); command-line flags override file values.
struct RunConfig {
  // Language model: "scripted" replays llm_script, "http" talks to a
  // chat-completion endpoint. The API key is read from the environment
  // variable named by llm_api_key_env.
  std::string llm_backend = "http";
  std::string llm_script;
  std::string llm_url;
  std::string llm_path = "/v1/chat/completions";
  std::string llm_model = "default";
  std::string llm_api_key_env = "ARIA_API_KEY";
  double temperature = 0.0;

  // Retrieval: "local" searches term_index, "http" posts {query, k}.
  std::string retrieval_backend = "local";
  std::string retrieval_url;
  std::string retrieval_path = "/search";
  int k = 10;

  int max_depth = 6;
  int max_nodes = 64;
  int max_attempts = 16;
  double alpha = 0.9;
  double lambda = 0.8;

  bool no_got = false;
  bool no_rag = false;
  bool no_reflect = false;
  bool no_term_grounding = false;

  std::string cache_dir = ".aria-cache";
  std::string out_dir = "aria-out";

  // Compiler: "lean" runs lean_command inside lean_project, "scripted"
  // replays compiler_script.
  std::string compiler_backend = "lean";
  std::string compiler_script;
  std::string lean_project = ".";
  std::string lean_command = "lake env lean";
  std::string header = "import Mathlib";
  int timeout = 120;
  int compiler_pool = 2;

  std::string term_index;
  std::string analyzer_cmd;
  std::string prompts_dir;

  int workers = 1;
  int retries = 2;
  int backoff_ms = 500;

  int effective_attempts() const { return no_reflect ? 1 : max_attempts; }
};

// Sets one key from its textual value. Throws ConfigError naming the key.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Parses `key = value` lines. Relative paths are resolved against `base`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base = {});

// Reads and validates a config file; an empty file yields the defaults.
RunConfig load_config(const std::filesystem::path& path);

// Throws ConfigError for the first out-of-range field.
void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
std::string config_digest(const RunConfig& config);

}  // namespace aria
