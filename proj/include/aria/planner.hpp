#pragma once

#include <string>
#include <vector>

#include "aria/core/graph.hpp"
#include "aria/grounding.hpp"
#include "aria/llm.hpp"
#include "aria/prompts.hpp"

namespace aria {

struct ExpansionBudget {
  int max_depth = 6;
  int max_nodes = 64;

  void validate() const;
};

struct PlanningBackends {
  LlmClient& llm;
  RetrievalClient* retrieval = nullptr;  // unused when grounding.no_rag
  GroundingConfig grounding;
  const Prompts& prompts = Prompts::defaults();
};

// Parses `name :: gloss` lines, skipping list markers and lines without the
// separator. A reply of just NONE parses as an empty list; a reply with no
// usable line at all does not parse.
struct ConceptLines {
  bool parsed = false;
  std::vector<Concept> concepts;  // deduplicated by canonical name
};
ConceptLines parse_concept_lines(std::string_view reply);

// The synthetic root node standing for the statement itself.
Concept statement_concept(const InformalStatement& statement);

// Concepts named by the statement; one re-prompt, then PlanningFailed.
std::vector<Concept> extract_root_concepts(const InformalStatement& statement, LlmClient& llm,
                                           const Prompts& prompts = Prompts::defaults());

// Immediate prerequisites of an ungrounded concept. May be empty.
std::vector<Concept> propose_dependencies(const Concept& item, LlmClient& llm,
                                          const Prompts& prompts = Prompts::defaults());

// Breadth-first top-down expansion. Each frontier level is processed in
// canonical-name order; grounded nodes end their branch, ungrounded ones are
// marked NeedsSynthesis and expanded. Nodes beyond max_depth, or discovered
// once max_nodes nodes (root included) have been processed, are marked
// Failed("budget") without any backend call.
DependencyGraph expand(const InformalStatement& statement, PlanningBackends& backends,
                       const ExpansionBudget& budget = {});

// Flat keyword plan: root plus one grounded-or-NeedsSynthesis node per
// keyword, no recursion.
DependencyGraph flat_plan(const InformalStatement& statement, PlanningBackends& backends);

}  // namespace aria
