#include "aria/core/graph.hpp"

#include <deque>
#include <queue>
#include <stdexcept>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

DependencyGraph::DependencyGraph(Concept root) {
  if (root.name.empty()) throw std::invalid_argument("root concept name is empty");
  root_ = NodeId{next_id_++};
  ConceptNode node;
  node.id = root_;
  node.subject = std::move(root);
  by_name_.emplace(node.subject.name, root_);
  nodes_.emplace(root_, std::move(node));
  deps_[root_];
  dependents_[root_];
}

NodeId DependencyGraph::add_node(const Concept& item, std::optional<NodeId> parent) {
  NodeId target = parent.value_or(root_);
  if (!contains(target)) throw UnknownNode("unknown parent node " + target.str());
  Concept canon{canonicalize(item.name), item.gloss};
  if (canon.name.empty()) throw std::invalid_argument("concept name is empty");

  if (auto it = by_name_.find(canon.name); it != by_name_.end()) {
    NodeId existing = it->second;
    // Edge existing -> target closes a cycle iff target already (transitively)
    // feeds into existing.
    if (existing == target || reaches(target, existing))
      throw CycleError("adding '" + canon.name + "' under '" + node(target).subject.name +
                       "' would create a cycle");
    if (edges_.emplace(existing, target).second) {
      deps_[target].insert(existing);
      dependents_[existing].insert(target);
      recompute_depths();
    }
    return existing;
  }

  NodeId id{next_id_++};
  ConceptNode fresh;
  fresh.id = id;
  fresh.subject = std::move(canon);
  fresh.depth = nodes_.at(target).depth + 1;
  by_name_.emplace(fresh.subject.name, id);
  nodes_.emplace(id, std::move(fresh));
  edges_.emplace(id, target);
  deps_[target].insert(id);
  deps_[id];
  dependents_[id].insert(target);
  return id;
}

bool DependencyGraph::reaches(NodeId from, NodeId to) const {
  // Follows dependency -> dependent edges.
  std::set<NodeId> seen{from};
  std::deque<NodeId> todo{from};
  while (!todo.empty()) {
    NodeId cur = todo.front();
    todo.pop_front();
    if (cur == to) return true;
    for (NodeId next : dependents_.at(cur))
      if (seen.insert(next).second) todo.push_back(next);
  }
  return false;
}

void DependencyGraph::recompute_depths() {
  // Shortest distance from the root walking dependent -> dependency.
  for (auto& [id, n] : nodes_) n.depth = -1;
  nodes_.at(root_).depth = 0;
  std::deque<NodeId> todo{root_};
  while (!todo.empty()) {
    NodeId cur = todo.front();
    todo.pop_front();
    int d = nodes_.at(cur).depth;
    for (NodeId dep : deps_.at(cur)) {
      auto& n = nodes_.at(dep);
      if (n.depth < 0) {
        n.depth = d + 1;
        todo.push_back(dep);
      }
    }
  }
  for (auto& [id, n] : nodes_)
    if (n.depth < 0) n.depth = 0;
}

std::vector<NodeId> DependencyGraph::topological_order() const {
  std::map<NodeId, std::size_t> indegree;
  for (const auto& [id, d] : deps_) indegree[id] = d.size();
  auto by_name = [this](NodeId a, NodeId b) {
    return nodes_.at(a).subject.name > nodes_.at(b).subject.name;
  };
  std::priority_queue<NodeId, std::vector<NodeId>, decltype(by_name)> ready(by_name);
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.push(id);
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    NodeId cur = ready.top();
    ready.pop();
    order.push_back(cur);
    for (NodeId next : dependents_.at(cur))
      if (--indegree[next] == 0) ready.push(next);
  }
  if (order.size() != nodes_.size()) throw CycleError("dependency graph contains a cycle");
  return order;
}

std::set<NodeId> DependencyGraph::leaves() const {
  std::set<NodeId> out;
  for (const auto& [id, d] : deps_)
    if (d.empty()) out.insert(id);
  return out;
}

std::set<NodeId> DependencyGraph::dependencies(NodeId id) const {
  auto it = deps_.find(id);
  if (it == deps_.end()) throw UnknownNode("unknown node " + id.str());
  return it->second;
}

std::set<NodeId> DependencyGraph::dependents(NodeId id) const {
  auto it = dependents_.find(id);
  if (it == dependents_.end()) throw UnknownNode("unknown node " + id.str());
  return it->second;
}

std::set<NodeId> DependencyGraph::dependency_closure(NodeId id) const {
  std::set<NodeId> seen;
  std::deque<NodeId> todo{id};
  while (!todo.empty()) {
    NodeId cur = todo.front();
    todo.pop_front();
    for (NodeId dep : dependencies(cur))
      if (seen.insert(dep).second) todo.push_back(dep);
  }
  return seen;
}

const ConceptNode& DependencyGraph::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw UnknownNode("unknown node " + id.str());
  return it->second;
}

ConceptNode& DependencyGraph::mutable_node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw UnknownNode("unknown node " + id.str());
  return it->second;
}

std::optional<NodeId> DependencyGraph::find(std::string_view name) const {
  auto it = by_name_.find(canonicalize(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> DependencyGraph::ids() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  for (const auto& [id, n] : nodes_) out.push_back(id);
  return out;
}

int DependencyGraph::max_depth() const {
  int m = 0;
  for (const auto& [id, n] : nodes_) m = std::max(m, n.depth);
  return m;
}

void DependencyGraph::mark_grounded(NodeId id, GroundingCandidate candidate) {
  auto& n = mutable_node(id);
  n.status = NodeStatus::Grounded;
  n.grounding = std::move(candidate);
  n.artifact.reset();
  n.failure.reset();
}

void DependencyGraph::mark_needs_synthesis(NodeId id) {
  auto& n = mutable_node(id);
  n.status = NodeStatus::NeedsSynthesis;
  n.grounding.reset();
  n.failure.reset();
}

void DependencyGraph::mark_synthesized(NodeId id, FormalArtifact artifact) {
  if (artifact.compile != CompileStatus::Ok)
    throw std::invalid_argument("synthesized artifact must have compiled successfully");
  auto& n = mutable_node(id);
  n.status = NodeStatus::Synthesized;
  n.artifact = std::move(artifact);
  n.grounding.reset();
  n.failure.reset();
}

void DependencyGraph::mark_failed(NodeId id, std::string reason,
                                  std::optional<FormalArtifact> last_attempt) {
  auto& n = mutable_node(id);
  n.status = NodeStatus::Failed;
  n.failure = std::move(reason);
  n.artifact = std::move(last_attempt);
  n.grounding.reset();
}

bool DependencyGraph::is_acyclic() const {
  // Three-colour DFS over the raw edge set, independent of the Kahn sort.
  enum Colour { White, Grey, Black };
  std::map<NodeId, Colour> colour;
  for (const auto& [id, n] : nodes_) colour[id] = White;
  std::map<NodeId, std::vector<NodeId>> out;
  for (const auto& [u, v] : edges_) out[u].push_back(v);
  for (const auto& [start, c] : nodes_) {
    if (colour[start] != White) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
    colour[start] = Grey;
    while (!stack.empty()) {
      auto& [cur, idx] = stack.back();
      auto& succ = out[cur];
      if (idx < succ.size()) {
        NodeId next = succ[idx++];
        if (colour[next] == Grey) return false;
        if (colour[next] == White) {
          colour[next] = Grey;
          stack.emplace_back(next, 0);
        }
      } else {
        colour[cur] = Black;
        stack.pop_back();
      }
    }
  }
  return true;
}

json to_json(const Diagnostic& d) {
  return json{{"severity", to_string(d.severity)},
              {"line", d.line},
              {"column", d.column},
              {"message", d.message}};
}

Diagnostic diagnostic_from_json(const json& j) {
  Diagnostic d;
  auto sev = j.at("severity").get<std::string>();
  d.severity = sev == "warning" ? Severity::Warning
               : sev == "info"  ? Severity::Info
                                : Severity::Error;
  d.line = j.at("line").get<int>();
  d.column = j.at("column").get<int>();
  d.message = j.at("message").get<std::string>();
  return d;
}

json to_json(const GroundingCandidate& c) {
  json j{{"formal_name", c.formal_name},
         {"formal_statement", c.formal_statement},
         {"informal_description", c.informal_description},
         {"rank", c.rank}};
  if (c.relevance) j["relevance"] = *c.relevance;
  return j;
}

GroundingCandidate candidate_from_json(const json& j) {
  GroundingCandidate c;
  c.formal_name = j.at("formal_name").get<std::string>();
  c.formal_statement = j.value("formal_statement", "");
  c.informal_description = j.value("informal_description", "");
  c.rank = j.value("rank", 1);
  if (j.contains("relevance") && !j["relevance"].is_null()) c.relevance = j["relevance"].get<double>();
  return c;
}

json to_json(const FormalArtifact& a) {
  json diags = json::array();
  for (const auto& d : a.diagnostics) diags.push_back(to_json(d));
  return json{{"kind", to_string(a.kind)},
              {"source", a.source},
              {"compile", to_string(a.compile)},
              {"diagnostics", diags}};
}

FormalArtifact artifact_from_json(const json& j) {
  FormalArtifact a;
  auto kind = j.at("kind").get<std::string>();
  a.kind = kind == "Theorem"    ? ArtifactKind::Theorem
           : kind == "Instance" ? ArtifactKind::Instance
                                : ArtifactKind::Definition;
  a.source = j.at("source").get<std::string>();
  auto compile = j.at("compile").get<std::string>();
  a.compile = compile == "Ok"      ? CompileStatus::Ok
              : compile == "Error" ? CompileStatus::Error
                                   : CompileStatus::Unchecked;
  for (const auto& d : j.value("diagnostics", json::array())) a.diagnostics.push_back(diagnostic_from_json(d));
  return a;
}

json DependencyGraph::to_json() const {
  json nodes = json::array();
  for (const auto& [id, n] : nodes_) {
    json parents = json::array();
    for (NodeId p : dependents_.at(id)) parents.push_back(p.str());
    json j{{"id", id.str()},
           {"name", n.subject.name},
           {"gloss", n.subject.gloss},
           {"status", to_string(n.status)},
           {"depth", n.depth},
           {"parents", parents}};
    if (n.grounding) j["grounding"] = aria::to_json(*n.grounding);
    if (n.artifact) j["artifact"] = aria::to_json(*n.artifact);
    if (n.failure) j["failure"] = *n.failure;
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& [u, v] : edges_) edges.push_back(json::array({u.str(), v.str()}));
  return json{{"root", root_.str()}, {"nodes", nodes}, {"edges", edges}};
}

DependencyGraph DependencyGraph::from_json(const json& j) {
  NodeId root = NodeId::parse(j.at("root").get<std::string>());
  std::map<NodeId, const json*> by_id;
  for (const auto& n : j.at("nodes")) by_id[NodeId::parse(n.at("id").get<std::string>())] = &n;
  if (!by_id.count(root)) throw std::invalid_argument("graph root missing from nodes");

  const json& rj = *by_id.at(root);
  DependencyGraph g(Concept{canonicalize(rj.at("name").get<std::string>()), rj.value("gloss", "")});
  g.nodes_.clear();
  g.by_name_.clear();
  g.deps_.clear();
  g.dependents_.clear();
  g.root_ = root;
  for (const auto& [id, nj] : by_id) {
    ConceptNode n;
    n.id = id;
    n.subject = Concept{canonicalize(nj->at("name").get<std::string>()), nj->value("gloss", "")};
    n.status = node_status_from_string(nj->at("status").get<std::string>());
    n.depth = nj->value("depth", 0);
    if (nj->contains("grounding")) n.grounding = candidate_from_json(nj->at("grounding"));
    if (nj->contains("artifact")) n.artifact = artifact_from_json(nj->at("artifact"));
    if (nj->contains("failure")) n.failure = nj->at("failure").get<std::string>();
    if (!g.by_name_.emplace(n.subject.name, id).second)
      throw std::invalid_argument("duplicate concept name '" + n.subject.name + "'");
    g.deps_[id];
    g.dependents_[id];
    g.nodes_.emplace(id, std::move(n));
    g.next_id_ = std::max(g.next_id_, id.value + 1);
  }
  for (const auto& e : j.at("edges")) {
    NodeId u = NodeId::parse(e.at(0).get<std::string>());
    NodeId v = NodeId::parse(e.at(1).get<std::string>());
    if (!g.contains(u) || !g.contains(v)) throw UnknownNode("edge endpoint missing");
    g.edges_.emplace(u, v);
    g.deps_[v].insert(u);
    g.dependents_[u].insert(v);
  }
  if (!g.is_acyclic()) throw CycleError("serialized graph contains a cycle");
  return g;
}

}  // namespace aria
