#include "aria/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include "aria/core/types.hpp"
#include "aria/errors.hpp"
#include "aria/gateway.hpp"

namespace aria {

using nlohmann::json;

namespace {

using Field = std::variant<std::string RunConfig::*, int RunConfig::*, double RunConfig::*, bool RunConfig::*>;

struct FieldInfo {
  Field member;
  bool path = false;  // resolved against the config file's directory
};

const std::map<std::string, FieldInfo, std::less<>>& fields() {
  static const std::map<std::string, FieldInfo, std::less<>> f = {
      {"llm_backend", {&RunConfig::llm_backend}},
      {"llm_script", {&RunConfig::llm_script, true}},
      {"llm_url", {&RunConfig::llm_url}},
      {"llm_path", {&RunConfig::llm_path}},
      {"llm_model", {&RunConfig::llm_model}},
      {"llm_api_key_env", {&RunConfig::llm_api_key_env}},
      {"temperature", {&RunConfig::temperature}},
      {"retrieval_backend", {&RunConfig::retrieval_backend}},
      {"retrieval_url", {&RunConfig::retrieval_url}},
      {"retrieval_path", {&RunConfig::retrieval_path}},
      {"k", {&RunConfig::k}},
      {"max_depth", {&RunConfig::max_depth}},
      {"max_nodes", {&RunConfig::max_nodes}},
      {"max_attempts", {&RunConfig::max_attempts}},
      {"alpha", {&RunConfig::alpha}},
      {"lambda", {&RunConfig::lambda}},
      {"no_got", {&RunConfig::no_got}},
      {"no_rag", {&RunConfig::no_rag}},
      {"no_reflect", {&RunConfig::no_reflect}},
      {"no_term_grounding", {&RunConfig::no_term_grounding}},
      {"cache_dir", {&RunConfig::cache_dir}},
      {"out_dir", {&RunConfig::out_dir}},
      {"compiler_backend", {&RunConfig::compiler_backend}},
      {"compiler_script", {&RunConfig::compiler_script, true}},
      {"lean_project", {&RunConfig::lean_project, true}},
      {"lean_command", {&RunConfig::lean_command}},
      {"header", {&RunConfig::header}},
      {"timeout", {&RunConfig::timeout}},
      {"compiler_pool", {&RunConfig::compiler_pool}},
      {"term_index", {&RunConfig::term_index, true}},
      {"analyzer_cmd", {&RunConfig::analyzer_cmd}},
      {"prompts_dir", {&RunConfig::prompts_dir, true}},
      {"workers", {&RunConfig::workers}},
      {"retries", {&RunConfig::retries}},
      {"backoff_ms", {&RunConfig::backoff_ms}},
  };
  return f;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  std::string t = canonicalize(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(std::string(key), "expected a boolean, got '" + std::string(text) + "'");
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError(std::string(key), "unknown key");
  std::string v = unquote(trim(value));
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, std::string>)
          config.*member = v;
        else if constexpr (std::is_same_v<T, bool>)
          config.*member = parse_bool(key, v);
        else
          config.*member = parse_number<T>(key, v);
      },
      it->second.member);
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n), "expected `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    apply_setting(config, key, value);
    const auto& info = fields().at(key);
    if (info.path && !base.empty()) {
      auto member = std::get<std::string RunConfig::*>(info.member);
      std::filesystem::path p(config.*member);
      if (!p.empty() && p.is_relative()) config.*member = (base / p).lexically_normal().string();
    }
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
  };
  require(c.llm_backend == "http" || c.llm_backend == "scripted", "llm_backend", "must be http or scripted");
  require(c.retrieval_backend == "local" || c.retrieval_backend == "http", "retrieval_backend",
          "must be local or http");
  require(c.compiler_backend == "lean" || c.compiler_backend == "scripted", "compiler_backend",
          "must be lean or scripted");
  require(c.temperature >= 0.0, "temperature", "must be >= 0");
  require(c.k >= 1, "k", "must be >= 1");
  require(c.max_depth >= 1, "max_depth", "must be >= 1");
  require(c.max_nodes >= 1, "max_nodes", "must be >= 1");
  require(c.max_attempts >= 1, "max_attempts", "must be >= 1");
  require(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha", "must lie in [0, 1]");
  require(c.lambda > 0.0 && c.lambda < 1.0, "lambda", "must lie in (0, 1)");
  require(c.timeout >= 1, "timeout", "must be >= 1 second");
  require(c.compiler_pool >= 1 && c.compiler_pool <= 64, "compiler_pool", "must lie in [1, 64]");
  require(c.workers >= 1 && c.workers <= 64, "workers", "must lie in [1, 64]");
  require(c.retries >= 0, "retries", "must be >= 0");
  require(c.backoff_ms >= 0, "backoff_ms", "must be >= 0");
}

json to_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& [key, info] : fields())
    std::visit([&](auto member) { j[key] = config.*member; }, info.member);
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig config;
  for (const auto& [key, value] : j.items()) {
    auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError(key, "unknown key");
    try {
      std::visit(
          [&](auto member) {
            using T = std::remove_reference_t<decltype(config.*member)>;
            config.*member = value.get<T>();
          },
          it->second.member);
    } catch (const json::exception& e) {
      throw ConfigError(key, e.what());
    }
  }
  validate(config);
  return config;
}

std::string config_digest(const RunConfig& config) { return sha256_hex(canonical_json(to_json(config))); }

}  // namespace aria
