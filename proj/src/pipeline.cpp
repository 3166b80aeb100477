#include "aria/pipeline.hpp"

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

FormalizeResult formalize(const InformalStatement& statement, PipelineBackends& backends,
                          const PipelineOptions& options) {
  statement.validate();
  auto& transcript = backends.gateway.transcript();
  transcript.set_problem(statement.id);
  transcript.event("problem_begin", {{"problem", statement.id}});

  FormalizeResult result;
  result.id = statement.id;
  PlanningBackends planning{backends.llm, backends.retrieval, options.grounding, backends.prompts};
  try {
    result.graph = options.no_got ? flat_plan(statement, planning) : expand(statement, planning, options.budget);
  } catch (const PlanningFailed& e) {
    result.error = std::string("planning: ") + e.what();
  } catch (const BackendUnavailable& e) {
    result.error = std::string("planning: ") + e.what();
  } catch (const MalformedResponse& e) {
    result.error = std::string("planning: ") + e.what();
  }

  if (result.graph) {
    transcript.event("plan_end", {{"graph", result.graph->to_json()}});
    SynthesisBackends synth{backends.llm, backends.compiler, backends.prompts, backends.header, &transcript};
    result.final = synthesize_graph(*result.graph, statement, synth, options.reflection);

    const auto& root = result.graph->node(result.graph->root());
    if (options.score && result.compiled() && root.artifact) {
      ScorerBackends scorer{backends.llm,      backends.index,  &backends.gateway,
                            backends.analyzer, backends.prompts, options.lambda,
                            options.no_term_grounding};
      try {
        result.score = score_statement(statement, result.final->file, scorer, options.alpha);
      } catch (const ScorerFailed& e) {
        result.error = std::string("scoring: ") + e.what();
      } catch (const BackendUnavailable& e) {
        result.error = std::string("scoring: ") + e.what();
      } catch (const IndexUnavailable& e) {
        result.error = std::string("scoring: ") + e.what();
      }
    }
  }

  json end = {{"compiled", result.compiled()}, {"success", result.success()}};
  if (result.final) end["status"] = to_string(result.final->status);
  if (result.score) {
    end["score"] = result.score->score;
    end["accepted"] = result.score->accepted;
  }
  if (result.error) end["error"] = *result.error;
  transcript.event("problem_end", std::move(end));
  return result;
}

json to_json(const FormalizeResult& r) {
  json j = {{"id", r.id}, {"compiled", r.compiled()}, {"success", r.success()}};
  if (r.graph) j["graph"] = r.graph->to_json();
  if (r.final) {
    j["final"] = to_json(*r.final);
    j["file"] = r.final->file;
  }
  if (r.score) j["score"] = to_json(*r.score);
  if (r.error) j["error"] = *r.error;
  return j;
}

}  // namespace aria
