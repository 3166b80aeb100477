#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "aria/errors.hpp"
#include "aria/grounding.hpp"
#include "aria/llm.hpp"

namespace aria {

using nlohmann::json;

namespace {

std::string post_json(const HttpEndpoint& endpoint, const json& body) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(std::chrono::seconds(endpoint.timeout_seconds));
  httplib::Headers headers;
  if (!endpoint.auth_value.empty()) headers.emplace(endpoint.auth_header, endpoint.auth_value);
  auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!res) throw BackendUnavailable(endpoint.base_url + endpoint.path + ": " + httplib::to_string(res.error()));
  if (res->status >= 500 || res->status == 429)
    throw BackendUnavailable(endpoint.base_url + endpoint.path + ": HTTP " + std::to_string(res->status));
  if (res->status >= 400)
    throw MalformedResponse(endpoint.base_url + endpoint.path + ": HTTP " + std::to_string(res->status) +
                            ": " + res->body);
  return res->body;
}

}  // namespace

HttpLlm::HttpLlm(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

std::string HttpLlm::id() const { return "http:" + endpoint_.base_url + endpoint_.path; }

std::string HttpLlm::send(const LlmRequest& request) {
  json body = to_wire(request);
  if (request.model.empty() || request.model == "default") body["model"] = model_;
  return post_json(endpoint_, body);
}

std::string HttpRetrieval::id() const { return "http:" + endpoint_.base_url + endpoint_.path; }

std::string HttpRetrieval::send(const std::string& query, int k) {
  return post_json(endpoint_, json{{"query", query}, {"k", k}});
}

}  // namespace aria
