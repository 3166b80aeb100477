#include "aria/llm.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

namespace {
constexpr std::array<std::string_view, 6> kPurposeNames = {
    "Decompose", "GroundSelect", "Synthesize", "Reflect", "ScorerDecompose", "ScorerEvaluate"};
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(Purpose purpose) {
  return kPurposeNames[static_cast<std::size_t>(purpose)];
}

Purpose purpose_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kPurposeNames.size(); ++i)
    if (kPurposeNames[i] == text) return static_cast<Purpose>(i);
  throw std::invalid_argument("unknown purpose '" + std::string(text) + "'");
}

void LlmRequest::validate() const {
  if (messages.empty()) throw std::invalid_argument("LLM request has no messages");
  if (messages.back().role != Role::User)
    throw std::invalid_argument("LLM request must end with a user message");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
}

json to_wire(const LlmRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages)
    messages.push_back(json{{"role", to_string(m.role)}, {"content", m.text}});
  return json{{"model", request.model}, {"temperature", request.temperature}, {"messages", messages}};
}

json cache_key(const LlmRequest& request, std::string_view backend_id) {
  json key = to_wire(request);
  key["backend"] = backend_id;
  key["kind"] = "llm";
  return key;
}

std::string request_digest(const LlmRequest& request, std::string_view backend_id) {
  return sha256_hex(canonical_json(cache_key(request, backend_id)));
}

std::string make_completion_payload(std::string_view text) {
  json j{{"object", "chat.completion"},
         {"choices", json::array({json{{"index", 0},
                                       {"finish_reason", "stop"},
                                       {"message", json{{"role", "assistant"}, {"content", text}}}}})}};
  return j.dump();
}

LlmResponse decode_completion(std::string_view payload) {
  json j = json::parse(payload, nullptr, false);
  if (j.is_discarded()) throw MalformedResponse("completion payload is not JSON");
  try {
    LlmResponse r;
    const auto& content = j.at("choices").at(0).at("message").at("content");
    r.text = content.is_null() ? std::string() : content.get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      TokenUsage u;
      u.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      u.completion_tokens = j["usage"].value("completion_tokens", 0);
      r.usage = u;
    }
    return r;
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("completion payload: ") + e.what());
  }
}

// --- ScriptedLlm -----------------------------------------------------------

ScriptedLlm::Entry ScriptedLlm::entry_from_json(const json& j) {
  Entry e;
  if (j.contains("purpose")) e.purpose = purpose_from_string(j.at("purpose").get<std::string>());
  if (j.contains("contains")) e.contains = j.at("contains").get<std::string>();
  e.response = j.value("response", "");
  e.repeat = j.value("repeat", false);
  e.unavailable = j.value("unavailable", false);
  return e;
}

ScriptedLlm ScriptedLlm::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendUnavailable("cannot read LLM script " + path.string());
  std::vector<Entry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    entries.push_back(entry_from_json(json::parse(line)));
  }
  return ScriptedLlm(std::move(entries));
}

void ScriptedLlm::push(Entry entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::string ScriptedLlm::send(const LlmRequest& request) {
  std::lock_guard lock(mutex_);
  const std::string& last = request.messages.back().text;
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->purpose && *it->purpose != request.purpose) continue;
    if (it->contains && last.find(*it->contains) == std::string::npos) continue;
    Entry e = *it;
    if (!e.repeat) entries_.erase(it);
    ++consumed_;
    if (e.unavailable) throw BackendUnavailable("scripted LLM: simulated outage");
    return make_completion_payload(e.response);
  }
  throw BackendUnavailable("scripted LLM: no entry matches " + std::string(to_string(request.purpose)) +
                           " request");
}

std::size_t ScriptedLlm::consumed() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

std::size_t ScriptedLlm::remaining() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// --- LlmClient -------------------------------------------------------------

LlmClient::LlmClient(LlmBackend& backend, Gateway& gateway, std::string model, double temperature)
    : backend_(backend), gateway_(gateway), model_(std::move(model)), temperature_(temperature) {}

LlmRequest LlmClient::request(Purpose purpose, std::vector<Message> messages) const {
  return LlmRequest{std::move(messages), model_, temperature_, purpose};
}

LlmResponse LlmClient::complete(const LlmRequest& request) {
  request.validate();
  auto result = gateway_.call(BackendKind::Llm, to_string(request.purpose),
                              cache_key(request, backend_.id()),
                              [&] { return backend_.send(request); });
  LlmResponse response;
  try {
    response = decode_completion(result.payload);
  } catch (const MalformedResponse&) {
    // A poisoned entry must not be served again.
    if (!result.from_cache) gateway_.cache().erase(result.digest);
    throw;
  }
  response.from_cache = result.from_cache;
  return response;
}

LlmResponse LlmClient::ask(Purpose purpose, std::string system, std::string user) {
  std::vector<Message> messages;
  if (!system.empty()) messages.push_back({Role::System, std::move(system)});
  messages.push_back({Role::User, std::move(user)});
  return complete(request(purpose, std::move(messages)));
}

}  // namespace aria
