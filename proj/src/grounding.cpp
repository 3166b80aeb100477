#include "aria/grounding.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

int LocalIndexRetrieval::overlap_score(const std::vector<std::string>& query_tokens, const TermInfo& record) {
  auto doc = lexical_tokens(record.informal_name + " " + record.informal_description);
  std::set<std::string> doc_set(doc.begin(), doc.end());
  std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());
  int score = 0;
  for (const auto& t : query_set) score += doc_set.count(t) ? 1 : 0;
  return score;
}

std::string LocalIndexRetrieval::send(const std::string& query, int k) {
  auto q = lexical_tokens(query);
  struct Scored {
    int score;
    const TermInfo* rec;
  };
  std::vector<Scored> scored;
  for (const auto& rec : index_.records()) {
    int s = overlap_score(q, rec);
    if (s > 0) scored.push_back({s, &rec});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.rec->name.size() != b.rec->name.size()) return a.rec->name.size() < b.rec->name.size();
    return a.rec->name < b.rec->name;
  });
  json out = json::array();
  std::set<std::string> seen;
  for (const auto& s : scored) {
    if (static_cast<int>(out.size()) >= k) break;
    if (!seen.insert(s.rec->name).second) continue;
    out.push_back(json{{"formal_name", s.rec->name},
                       {"formal_statement", s.rec->type_sig.empty() ? s.rec->value : s.rec->type_sig},
                       {"informal_description", s.rec->informal_description},
                       {"score", s.score}});
  }
  return out.dump();
}

std::vector<GroundingCandidate> decode_candidates(std::string_view payload, int k) {
  json j = json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw MalformedResponse("search payload is not a JSON array");
  struct Row {
    GroundingCandidate c;
    std::size_t pos;
  };
  std::vector<Row> rows;
  std::set<std::string> seen;
  try {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& r = j[i];
      GroundingCandidate c;
      c.formal_name = r.at("formal_name").get<std::string>();
      if (!seen.insert(c.formal_name).second) continue;
      c.formal_statement = r.value("formal_statement", "");
      c.informal_description = r.value("informal_description", "");
      if (r.contains("score") && r["score"].is_number()) c.relevance = r["score"].get<double>();
      rows.push_back({std::move(c), i});
    }
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("search payload: ") + e.what());
  }
  // Service order is kept unless scores say otherwise.
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    double sa = a.c.relevance.value_or(0.0), sb = b.c.relevance.value_or(0.0);
    if (a.c.relevance && b.c.relevance && sa != sb) return sa > sb;
    return a.pos < b.pos;
  });
  std::vector<GroundingCandidate> out;
  for (auto& row : rows) {
    if (static_cast<int>(out.size()) >= k) break;
    row.c.rank = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(row.c));
  }
  return out;
}

std::vector<GroundingCandidate> RetrievalClient::search(const Concept& item, int k) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  json key{{"kind", "retrieval"}, {"backend", backend_.id()}, {"query", item.name}, {"k", k}};
  auto result = gateway_.call(BackendKind::Retrieval, "search", key,
                              [&] { return backend_.send(item.name, k); });
  return decode_candidates(result.payload, k);
}

SelectionAnswer parse_selection(std::string_view reply, std::size_t candidate_count) {
  static const std::regex pattern(
      R"(^\s*(?:answer\s*[:\-]?\s*)?(?:candidate\s*)?#?\s*(\d+|none)\s*\.?\s*$)", std::regex::icase);
  std::string text = trim(reply);
  text.erase(std::remove_if(text.begin(), text.end(), [](char c) { return c == '*' || c == '`'; }),
             text.end());
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) return {};
  std::string token = m[1].str();
  if (std::isalpha(static_cast<unsigned char>(token[0]))) return {SelectionAnswer::Kind::None, 0};
  if (token.size() > 6) return {};
  int index = std::stoi(token);
  if (index < 1 || static_cast<std::size_t>(index) > candidate_count) return {};
  return {SelectionAnswer::Kind::Index, index};
}

namespace {

std::string format_candidates(const std::vector<GroundingCandidate>& candidates) {
  std::string out;
  for (const auto& c : candidates) {
    out += std::to_string(c.rank) + ". " + c.formal_name;
    if (!c.formal_statement.empty()) out += " : " + c.formal_statement;
    out += "\n";
    if (!c.informal_description.empty()) out += "   " + c.informal_description + "\n";
  }
  return out;
}

std::vector<Message> base_messages(const Prompts& prompts, std::string user) {
  return {{Role::System, prompts.get("system")}, {Role::User, std::move(user)}};
}

}  // namespace

GroundingResult select_canonical(const Concept& item, const std::vector<GroundingCandidate>& candidates,
                                 LlmClient& llm, const Prompts& prompts) {
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].rank != static_cast<int>(i) + 1)
      throw std::invalid_argument("candidate ranks must be contiguous from 1");
  if (candidates.empty()) return Ungrounded{"no candidates"};

  auto messages = base_messages(prompts, prompts.render("ground_select", {{"concept", item.name},
                                                                           {"gloss", item.gloss},
                                                                           {"candidates", format_candidates(candidates)}}));
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = llm.complete(llm.request(Purpose::GroundSelect, messages)).text;
    auto answer = parse_selection(reply, candidates.size());
    switch (answer.kind) {
      case SelectionAnswer::Kind::Index:
        return Grounded{candidates[static_cast<std::size_t>(answer.index) - 1]};
      case SelectionAnswer::Kind::None:
        return Ungrounded{"reasoner declined"};
      case SelectionAnswer::Kind::Unparseable:
        messages.push_back({Role::Assistant, reply});
        messages.push_back({Role::User, prompts.render("ground_reminder",
                                                       {{"count", std::to_string(candidates.size())}})});
        break;
    }
  }
  return Ungrounded{"unparseable"};
}

namespace {

GroundingResult recall_name(const Concept& item, LlmClient& llm, const Prompts& prompts) {
  auto reply = llm.complete(llm.request(
                                Purpose::GroundSelect,
                                base_messages(prompts, prompts.render("ground_recall", {{"concept", item.name},
                                                                                        {"gloss", item.gloss}}))))
                   .text;
  std::string name = trim(reply.substr(0, reply.find('\n')));
  name.erase(std::remove(name.begin(), name.end(), '`'), name.end());
  name = trim(name);
  if (name.empty()) return Ungrounded{"unparseable"};
  std::string lowered = canonicalize(name);
  if (lowered == "none" || lowered == "none.") return Ungrounded{"reasoner declined"};
  GroundingCandidate c;
  c.formal_name = name;
  c.rank = 1;
  return Grounded{std::move(c)};
}

}  // namespace

GroundingResult ground(NodeId id, DependencyGraph& graph, LlmClient& llm, RetrievalClient* retrieval,
                       const GroundingConfig& config, const Prompts& prompts) {
  const Concept item = graph.node(id).subject;
  try {
    GroundingResult result;
    if (config.no_rag) {
      result = recall_name(item, llm, prompts);
    } else {
      if (retrieval == nullptr) throw BackendUnavailable("no retrieval backend configured");
      auto candidates = retrieval->search(item, config.k);
      result = candidates.empty() ? GroundingResult{Ungrounded{"no candidates"}}
                                  : select_canonical(item, candidates, llm, prompts);
    }
    if (auto* g = std::get_if<Grounded>(&result)) graph.mark_grounded(id, g->candidate);
    return result;
  } catch (const BackendUnavailable& e) {
    spdlog::warn("grounding '{}' failed: {}", item.name, e.what());
    graph.mark_failed(id, std::string("backend: ") + e.what());
    return Ungrounded{std::string("backend: ") + e.what()};
  } catch (const MalformedResponse& e) {
    graph.mark_failed(id, std::string("backend: ") + e.what());
    return Ungrounded{std::string("backend: ") + e.what()};
  }
}

}  // namespace aria
