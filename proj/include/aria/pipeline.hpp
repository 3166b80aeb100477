#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "aria/compiler.hpp"
#include "aria/grounding.hpp"
#include "aria/planner.hpp"
#include "aria/scorer.hpp"
#include "aria/synth.hpp"

namespace aria {

struct PipelineOptions {
  GroundingConfig grounding;
  ExpansionBudget budget;
  ReflectionPolicy reflection;
  bool no_got = false;
  bool no_term_grounding = false;
  bool score = false;  // run the scorer on the emitted theorem
  double alpha = 0.9;
  double lambda = 0.8;
};

// Everything a run talks to. Only `llm`, `compiler` and `gateway` are
// required; `retrieval` may be null under no_rag, `index` when not scoring
// with term grounding.
struct PipelineBackends {
  LlmClient& llm;
  CompilerClient& compiler;
  Gateway& gateway;
  RetrievalClient* retrieval = nullptr;
  const TermIndex* index = nullptr;
  AnalyzerConfig analyzer;
  const Prompts& prompts = Prompts::defaults();
  std::string header = "import Mathlib";
};

struct FormalizeResult {
  std::string id;
  std::optional<DependencyGraph> graph;  // absent when planning failed
  std::optional<FinalResult> final;
  std::optional<ScoreReport> score;
  std::optional<std::string> error;

  bool compiled() const { return final && final->status == FinalStatus::Compiled; }
  // Compiled, and accepted when scoring was requested.
  bool success() const { return compiled() && (!score || score->accepted); }
};

// Plan (expand, or flat_plan under no_got), synthesize, then optionally
// score. Planning and scoring failures are recorded in `error`; CacheMiss
// propagates. Emits problem_begin, plan_end and problem_end events.
FormalizeResult formalize(const InformalStatement& statement, PipelineBackends& backends,
                          const PipelineOptions& options);

nlohmann::json to_json(const FormalizeResult& result);

}  // namespace aria
