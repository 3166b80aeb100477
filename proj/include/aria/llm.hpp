#pragma once

#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aria/gateway.hpp"

namespace aria {

enum class Role { System, User, Assistant };

struct Message {
  Role role = Role::User;
  std::string text;
};

enum class Purpose { Decompose, GroundSelect, Synthesize, Reflect, ScorerDecompose, ScorerEvaluate };

std::string_view to_string(Role role);
std::string_view to_string(Purpose purpose);
Purpose purpose_from_string(std::string_view text);

struct LlmRequest {
  std::vector<Message> messages;
  std::string model;
  double temperature = 0.0;
  Purpose purpose = Purpose::Decompose;

  // Throws std::invalid_argument unless messages are non-empty, end on a
  // user turn, and temperature >= 0.
  void validate() const;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct LlmResponse {
  std::string text;
  bool from_cache = false;
  std::optional<TokenUsage> usage;
};

// A chat-completion provider. `send` returns the raw wire payload in the
// chat-completion response shape: {"choices":[{"message":{"content":...}}]}.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string send(const LlmRequest& request) = 0;
};

// Chat-completion wire encoding of a request (the HTTP body).
nlohmann::json to_wire(const LlmRequest& request);

// The cache key: backend id, model, temperature and messages.
nlohmann::json cache_key(const LlmRequest& request, std::string_view backend_id);
std::string request_digest(const LlmRequest& request, std::string_view backend_id);

// Wraps a single completion text in the response wire shape.
std::string make_completion_payload(std::string_view text);

// Decodes a chat-completion payload; throws MalformedResponse.
LlmResponse decode_completion(std::string_view payload);

// Deterministic backend driven by an ordered queue of (matcher, response)
// entries. For each request the first entry whose matcher accepts it is
// consumed. An entry with `repeat` set stays in the queue.
class ScriptedLlm : public LlmBackend {
 public:
  struct Entry {
    std::optional<Purpose> purpose;
    std::optional<std::string> contains;  // substring of the last user turn
    std::string response;
    bool repeat = false;
    bool unavailable = false;  // simulate a transport failure instead
  };

  ScriptedLlm() = default;
  explicit ScriptedLlm(std::vector<Entry> entries) : entries_(entries.begin(), entries.end()) {}
  ScriptedLlm(ScriptedLlm&& other) noexcept : entries_(std::move(other.entries_)), consumed_(other.consumed_) {}

  // Line-delimited JSON: {"purpose"?, "contains"?, "response", "repeat"?, "unavailable"?}.
  static ScriptedLlm from_file(const std::filesystem::path& path);
  static Entry entry_from_json(const nlohmann::json& j);

  void push(Entry entry);
  std::string id() const override { return "scripted"; }
  std::string send(const LlmRequest& request) override;

  std::size_t consumed() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::deque<Entry> entries_;
  std::size_t consumed_ = 0;
};

struct HttpEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::string path;
  std::string auth_header = "Authorization";
  std::string auth_value;  // e.g. "Bearer <key>"; empty for none
  int timeout_seconds = 120;
};

// Remote chat-completion endpoint over HTTP(S).
class HttpLlm : public LlmBackend {
 public:
  HttpLlm(HttpEndpoint endpoint, std::string model);
  std::string id() const override;
  std::string send(const LlmRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
};

// Issues completions through the gateway so every call is cached and
// recorded. One transcript record per complete() invocation.
class LlmClient {
 public:
  LlmClient(LlmBackend& backend, Gateway& gateway, std::string model = "default",
            double temperature = 0.0);

  LlmResponse complete(const LlmRequest& request);

  // Builds a request using the client's model and temperature.
  LlmRequest request(Purpose purpose, std::vector<Message> messages) const;
  LlmResponse ask(Purpose purpose, std::string system, std::string user);

 private:
  LlmBackend& backend_;
  Gateway& gateway_;
  std::string model_;
  double temperature_;
};

}  // namespace aria
