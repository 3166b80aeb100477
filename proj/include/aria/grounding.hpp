#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aria/core/graph.hpp"
#include "aria/gateway.hpp"
#include "aria/llm.hpp"
#include "aria/prompts.hpp"
#include "aria/term_index.hpp"

namespace aria {

struct Grounded {
  GroundingCandidate candidate;
};

struct Ungrounded {
  std::string reason;
};

using GroundingResult = std::variant<Grounded, Ungrounded>;

inline bool is_grounded(const GroundingResult& r) { return std::holds_alternative<Grounded>(r); }

// A formal-library search service. `send` returns a JSON array of
// {formal_name, formal_statement, informal_description, score}.
class RetrievalBackend {
 public:
  virtual ~RetrievalBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string send(const std::string& query, int k) = 0;
};

// Offline stand-in for the search service. Scores every record by the number
// of distinct query tokens found in its informal name and description; ties
// go to the shorter formal name, then the lexicographically smaller one.
// Records sharing no token with the query are not returned.
class LocalIndexRetrieval : public RetrievalBackend {
 public:
  explicit LocalIndexRetrieval(const TermIndex& index) : index_(index) {}
  std::string id() const override { return "local-index:" + index_.digest().substr(0, 16); }
  std::string send(const std::string& query, int k) override;

  static int overlap_score(const std::vector<std::string>& query_tokens, const TermInfo& record);

 private:
  const TermIndex& index_;
};

// Remote search endpoint: POST {query, k}.
class HttpRetrieval : public RetrievalBackend {
 public:
  explicit HttpRetrieval(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string id() const override;
  std::string send(const std::string& query, int k) override;

 private:
  HttpEndpoint endpoint_;
};

// Decodes a search payload into rank-sorted candidates (ranks 1..n),
// dropping repeated formal names and truncating to k.
std::vector<GroundingCandidate> decode_candidates(std::string_view payload, int k);

class RetrievalClient {
 public:
  RetrievalClient(RetrievalBackend& backend, Gateway& gateway) : backend_(backend), gateway_(gateway) {}

  // At most k candidates ordered by descending relevance. Empty is valid.
  std::vector<GroundingCandidate> search(const Concept& item, int k);

 private:
  RetrievalBackend& backend_;
  Gateway& gateway_;
};

struct GroundingConfig {
  int k = 10;
  bool no_rag = false;
};

// Parsed reply of the selection prompt: candidate number, NONE, or nothing.
struct SelectionAnswer {
  enum class Kind { Index, None, Unparseable } kind = Kind::Unparseable;
  int index = 0;
};
SelectionAnswer parse_selection(std::string_view reply, std::size_t candidate_count);

// Asks the reasoner to pick the canonical definition among `candidates`.
// One re-prompt on unparseable output, then Ungrounded("unparseable").
GroundingResult select_canonical(const Concept& item, const std::vector<GroundingCandidate>& candidates,
                                 LlmClient& llm, const Prompts& prompts = Prompts::defaults());

// Grounds a Pending node. On Grounded the node is updated in place; on
// Ungrounded its status is left for the planner. Backend failures mark the
// node Failed and are reported as Ungrounded.
GroundingResult ground(NodeId id, DependencyGraph& graph, LlmClient& llm, RetrievalClient* retrieval,
                       const GroundingConfig& config, const Prompts& prompts = Prompts::defaults());

}  // namespace aria
