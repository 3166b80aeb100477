#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aria {

// Case-folds and collapses internal whitespace runs to a single space,
// trimming both ends. ASCII, Latin-1, Greek and Cyrillic capitals fold;
// other code points pass through unchanged.
std::string canonicalize(std::string_view text);

std::string trim(std::string_view text);

struct InformalStatement {
  std::string id;
  std::string text;
  std::optional<std::string> origin;

  // Throws std::invalid_argument when text is blank.
  void validate() const;
};

struct Concept {
  std::string name;  // canonical form
  std::string gloss;

  // Canonicalizes `name`; throws std::invalid_argument if it is empty.
  static Concept make(std::string_view name, std::string_view gloss = {});

  friend bool operator==(const Concept&, const Concept&) = default;
};

enum class Severity { Error, Warning, Info };

struct Diagnostic {
  Severity severity = Severity::Error;
  int line = 1;    // 1-based
  int column = 0;  // 0-based
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

enum class ArtifactKind { Definition, Instance, Theorem };
enum class CompileStatus { Unchecked, Ok, Error };

struct FormalArtifact {
  ArtifactKind kind = ArtifactKind::Definition;
  std::string source;
  CompileStatus compile = CompileStatus::Unchecked;
  std::vector<Diagnostic> diagnostics;
};

struct GroundingCandidate {
  std::string formal_name;
  std::string formal_statement;
  std::string informal_description;
  int rank = 1;
  std::optional<double> relevance;

  friend bool operator==(const GroundingCandidate&, const GroundingCandidate&) = default;
};

enum class NodeStatus { Pending, Grounded, NeedsSynthesis, Synthesized, Failed };

struct NodeId {
  std::uint32_t value = 0;

  std::string str() const { return "n" + std::to_string(value); }
  static NodeId parse(std::string_view text);

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct ConceptNode {
  NodeId id;
  Concept subject;
  NodeStatus status = NodeStatus::Pending;
  int depth = 0;
  std::optional<GroundingCandidate> grounding;
  std::optional<FormalArtifact> artifact;
  std::optional<std::string> failure;
};

std::string_view to_string(NodeStatus status);
NodeStatus node_status_from_string(std::string_view text);
std::string_view to_string(Severity severity);
std::string_view to_string(ArtifactKind kind);
std::string_view to_string(CompileStatus status);

}  // namespace aria
