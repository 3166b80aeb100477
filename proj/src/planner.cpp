#include "aria/planner.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "aria/errors.hpp"

namespace aria {

void ExpansionBudget::validate() const {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (max_nodes < 1) throw std::invalid_argument("max_nodes must be >= 1");
}

namespace {

std::string strip_list_marker(std::string line) {
  line = trim(line);
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') && line[1] == ' ')
    return trim(line.substr(2));
  if (line.rfind("\xE2\x80\xA2", 0) == 0) return trim(line.substr(3));  // bullet
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ')
    return trim(line.substr(i + 2));
  return line;
}

std::string strip_markup(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '`' || c == '*'; }), s.end());
  return trim(s);
}

std::vector<Message> user_turn(const Prompts& prompts, std::string text) {
  return {{Role::System, prompts.get("system")}, {Role::User, std::move(text)}};
}

// Shared decompose/re-prompt loop. Returns nullopt when both replies fail
// to parse (or parse to an empty list while `allow_empty` is false).
std::optional<std::vector<Concept>> ask_for_concepts(LlmClient& llm, const Prompts& prompts, std::string prompt,
                                                     bool allow_empty) {
  auto messages = user_turn(prompts, std::move(prompt));
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = llm.complete(llm.request(Purpose::Decompose, messages)).text;
    auto lines = parse_concept_lines(reply);
    if (lines.parsed && (allow_empty || !lines.concepts.empty())) return lines.concepts;
    messages.push_back({Role::Assistant, reply});
    messages.push_back({Role::User, prompts.get("concept_format_reminder")});
  }
  return std::nullopt;
}

}  // namespace

ConceptLines parse_concept_lines(std::string_view reply) {
  ConceptLines out;
  std::string text = trim(reply);
  if (canonicalize(strip_markup(text)) == "none" || canonicalize(strip_markup(text)) == "none.") {
    out.parsed = true;
    return out;
  }
  std::set<std::string> seen;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    std::string line = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    line = strip_list_marker(line);
    auto sep = line.find("::");
    if (sep == std::string::npos) continue;
    std::string name = strip_markup(line.substr(0, sep));
    std::string gloss = trim(line.substr(sep + 2));
    if (canonicalize(name).empty()) continue;
    Concept c = Concept::make(name, gloss);
    if (seen.insert(c.name).second) out.concepts.push_back(std::move(c));
  }
  out.parsed = !out.concepts.empty();
  return out;
}

Concept statement_concept(const InformalStatement& statement) {
  return Concept::make("statement " + statement.id, statement.text);
}

std::vector<Concept> extract_root_concepts(const InformalStatement& statement, LlmClient& llm,
                                           const Prompts& prompts) {
  statement.validate();
  auto concepts =
      ask_for_concepts(llm, prompts, prompts.render("decompose_root", {{"statement", statement.text}}), false);
  if (!concepts) throw PlanningFailed("no concepts could be extracted from statement '" + statement.id + "'");
  return *concepts;
}

std::vector<Concept> propose_dependencies(const Concept& item, LlmClient& llm, const Prompts& prompts) {
  auto reply = llm.complete(llm.request(Purpose::Decompose,
                                        user_turn(prompts, prompts.render("propose_dependencies",
                                                                          {{"concept", item.name},
                                                                           {"gloss", item.gloss}}))))
                   .text;
  auto lines = parse_concept_lines(reply);
  std::vector<Concept> out;
  for (auto& c : lines.concepts)
    if (c.name != item.name) out.push_back(std::move(c));
  return out;
}

DependencyGraph expand(const InformalStatement& statement, PlanningBackends& backends,
                       const ExpansionBudget& budget) {
  budget.validate();
  DependencyGraph graph(statement_concept(statement));

  std::vector<NodeId> frontier;
  for (const auto& c : extract_root_concepts(statement, backends.llm, backends.prompts)) {
    NodeId id = graph.add_node(c, graph.root());
    if (std::find(frontier.begin(), frontier.end(), id) == frontier.end()) frontier.push_back(id);
  }

  int processed = 1;  // root
  while (!frontier.empty()) {
    std::sort(frontier.begin(), frontier.end(), [&](NodeId a, NodeId b) {
      return graph.node(a).subject.name < graph.node(b).subject.name;
    });
    std::vector<NodeId> next;
    for (NodeId id : frontier) {
      if (graph.node(id).status != NodeStatus::Pending) continue;
      if (graph.node(id).depth > budget.max_depth || processed >= budget.max_nodes) {
        graph.mark_failed(id, "budget");
        continue;
      }
      ++processed;
      auto result = ground(id, graph, backends.llm, backends.retrieval, backends.grounding, backends.prompts);
      if (is_grounded(result) || graph.node(id).status == NodeStatus::Failed) continue;

      graph.mark_needs_synthesis(id);
      std::vector<Concept> deps;
      try {
        deps = propose_dependencies(graph.node(id).subject, backends.llm, backends.prompts);
      } catch (const BackendUnavailable& e) {
        graph.mark_failed(id, std::string("backend: ") + e.what());
        continue;
      }
      for (const auto& d : deps) {
        try {
          NodeId child = graph.add_node(d, id);
          if (graph.node(child).status == NodeStatus::Pending &&
              std::find(next.begin(), next.end(), child) == next.end())
            next.push_back(child);
        } catch (const CycleError& e) {
          spdlog::warn("dropping prerequisite '{}' of '{}': {}", d.name, graph.node(id).subject.name, e.what());
        }
      }
    }
    frontier = std::move(next);
  }
  return graph;
}

DependencyGraph flat_plan(const InformalStatement& statement, PlanningBackends& backends) {
  statement.validate();
  DependencyGraph graph(statement_concept(statement));
  auto keywords = ask_for_concepts(backends.llm, backends.prompts,
                                   backends.prompts.render("decompose_keywords", {{"statement", statement.text}}),
                                   true);
  if (!keywords) throw PlanningFailed("no keywords could be extracted from statement '" + statement.id + "'");
  std::vector<NodeId> ids;
  for (const auto& k : *keywords) {
    NodeId id = graph.add_node(k, graph.root());
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end(),
            [&](NodeId a, NodeId b) { return graph.node(a).subject.name < graph.node(b).subject.name; });
  for (NodeId id : ids) {
    auto result = ground(id, graph, backends.llm, backends.retrieval, backends.grounding, backends.prompts);
    if (!is_grounded(result) && graph.node(id).status != NodeStatus::Failed) graph.mark_needs_synthesis(id);
  }
  return graph;
}

}  // namespace aria
