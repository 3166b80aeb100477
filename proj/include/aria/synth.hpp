#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aria/compiler.hpp"
#include "aria/core/graph.hpp"
#include "aria/llm.hpp"
#include "aria/prompts.hpp"

namespace aria {

struct ReflectionPolicy {
  int max_attempts = 16;
  bool enabled = true;

  // 1 when reflection is disabled.
  int effective_attempts() const { return enabled ? max_attempts : 1; }
  void validate() const;
};

struct GroundedRef {
  std::string formal_name;
  std::string formal_statement;

  friend bool operator==(const GroundedRef&, const GroundedRef&) = default;
};

struct SynthesisContext {
  std::vector<GroundedRef> grounded_refs;
  std::vector<std::string> synthesized_code;  // topological order
  std::variant<Concept, InformalStatement> target;
};

// Context from the immediate dependencies of `id`. Throws
// DependencyUnresolved unless every dependency is Grounded or Synthesized.
SynthesisContext assemble_context(NodeId id, const DependencyGraph& graph);

// Context from the whole dependency closure of `id`, skipping anything not
// Grounded or Synthesized. Used for the final theorem.
SynthesisContext assemble_available_context(NodeId id, const DependencyGraph& graph);

// Body of the last fenced code block in `reply`, without the language tag.
std::optional<std::string> extract_code_block(std::string_view reply);

// Header, then each block, then the candidate, separated by blank lines.
std::string compile_unit(std::string_view header, const std::vector<std::string>& blocks,
                         std::string_view candidate);

// Source of every Synthesized node `id` transitively depends on, in
// topological order.
std::vector<std::string> synthesized_closure(NodeId id, const DependencyGraph& graph);

struct SynthesisBackends {
  LlmClient& llm;
  CompilerClient& compiler;
  const Prompts& prompts = Prompts::defaults();
  std::string header = "import Mathlib";
  Transcript* transcript = nullptr;  // receives synth_begin / synth_end events
};

struct NodeOutcome {
  NodeId id;
  std::string name;
  NodeStatus status = NodeStatus::Pending;
  int attempts = 0;
  std::optional<std::string> failure;
};

// Generate, compile, reflect. On success the node becomes Synthesized; on
// exhaustion it becomes Failed("max attempts") with the last attempt
// attached. The root is synthesized as a theorem that must end in `sorry`.
NodeOutcome synthesize_node(NodeId id, DependencyGraph& graph, const SynthesisContext& context,
                            SynthesisBackends& backends, const ReflectionPolicy& policy);

enum class FinalStatus { Compiled, PartialFailure };
std::string_view to_string(FinalStatus status);

struct FinalResult {
  std::string file;
  FinalStatus status = FinalStatus::PartialFailure;
  std::vector<NodeOutcome> outcomes;        // every non-root node, then the root
  std::vector<NodeOutcome> failure_chain;   // Failed nodes in the root's closure
};

// Bottom-up pass over the planned graph: definition nodes in topological
// order, then the root theorem. Failed definitions do not stop the run.
FinalResult synthesize_graph(DependencyGraph& graph, const InformalStatement& statement,
                             SynthesisBackends& backends, const ReflectionPolicy& policy);

nlohmann::json to_json(const NodeOutcome& outcome);
nlohmann::json to_json(const FinalResult& result);

}  // namespace aria
