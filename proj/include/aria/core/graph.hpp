#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aria/core/types.hpp"

namespace aria {

// Concept-dependency DAG. Edges point dependency -> dependent, so the root
// (the statement being formalized) is the unique sink and a topological
// order is directly a bottom-up synthesis order.
//
// Single writer; concurrent readers are fine between mutations.
class DependencyGraph {
 public:
  explicit DependencyGraph(Concept root);

  // Inserts `item` as a dependency of `parent` (the root when absent).
  // A concept whose canonical name already exists reuses that node and only
  // gains the new edge. Throws CycleError (graph unchanged) if the edge would
  // close a cycle, UnknownNode if `parent` does not exist.
  NodeId add_node(const Concept& item, std::optional<NodeId> parent = std::nullopt);

  // Dependencies first; ties broken by ascending canonical name.
  std::vector<NodeId> topological_order() const;

  std::set<NodeId> leaves() const;
  std::set<NodeId> dependencies(NodeId id) const;
  std::set<NodeId> dependents(NodeId id) const;

  // Every node `id` transitively depends on, excluding `id` itself.
  std::set<NodeId> dependency_closure(NodeId id) const;

  NodeId root() const { return root_; }
  const ConceptNode& node(NodeId id) const;
  std::optional<NodeId> find(std::string_view name) const;
  bool contains(NodeId id) const { return nodes_.count(id) != 0; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  std::vector<NodeId> ids() const;
  int max_depth() const;

  // Status transitions. Each enforces the payload invariant of its status.
  void mark_grounded(NodeId id, GroundingCandidate candidate);
  void mark_needs_synthesis(NodeId id);
  void mark_synthesized(NodeId id, FormalArtifact artifact);
  void mark_failed(NodeId id, std::string reason,
                   std::optional<FormalArtifact> last_attempt = std::nullopt);

  // Full sweep; true when no directed cycle exists.
  bool is_acyclic() const;

  nlohmann::json to_json() const;
  static DependencyGraph from_json(const nlohmann::json& j);

 private:
  ConceptNode& mutable_node(NodeId id);
  bool reaches(NodeId from, NodeId to) const;
  void recompute_depths();

  std::map<NodeId, ConceptNode> nodes_;
  std::set<std::pair<NodeId, NodeId>> edges_;
  std::map<NodeId, std::set<NodeId>> deps_;        // id -> its dependencies
  std::map<NodeId, std::set<NodeId>> dependents_;  // id -> nodes depending on it
  std::unordered_map<std::string, NodeId> by_name_;
  NodeId root_;
  std::uint32_t next_id_ = 0;
};

nlohmann::json to_json(const GroundingCandidate& c);
GroundingCandidate candidate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FormalArtifact& a);
FormalArtifact artifact_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Diagnostic& d);
Diagnostic diagnostic_from_json(const nlohmann::json& j);

}  // namespace aria
