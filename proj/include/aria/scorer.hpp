#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aria/core/types.hpp"
#include "aria/gateway.hpp"
#include "aria/llm.hpp"
#include "aria/prompts.hpp"
#include "aria/term_index.hpp"

namespace aria {

struct SubtaskList {
  std::vector<std::string> conditions;
  std::vector<std::string> conclusions;

  std::size_t size() const { return conditions.size() + conclusions.size(); }
  // Conditions, then conclusions.
  std::vector<std::string> all() const;
};

enum class MatchLabel { PerfectMatch, MinorInconsistency, MajorInconsistency };
std::string_view to_string(MatchLabel label);
std::optional<MatchLabel> parse_match_label(std::string_view text);

struct SubtaskReport {
  std::string subtask;
  MatchLabel label = MatchLabel::MajorInconsistency;
  std::string justification;
  bool missing_check = false;  // the trailing missing/implicit-conditions item
};

struct ScoreReport {
  double score = 0.0;
  std::vector<SubtaskReport> reports;
  double alpha = 0.9;
  bool accepted = false;
  SubtaskList subtasks;
  std::vector<TermInfo> terms;
};

// Parses `Conditions:` / `Conclusions:` sections. Top-level list items are
// subtasks; deeper items and continuation lines fold into their parent.
// Returns nullopt when neither section yields an item.
std::optional<SubtaskList> parse_subtasks(std::string_view reply);

// One re-prompt, then ScorerFailed.
SubtaskList decompose_subtasks(const InformalStatement& informal, LlmClient& llm,
                               const Prompts& prompts = Prompts::defaults());

// Fallback extractor: dotted identifier chains (and their prefixes) and
// capitalized identifiers outside comments and strings, minus keywords and
// bound locals, kept only when the index knows them. First-seen order.
std::vector<std::string> lexical_terms(std::string_view source, const TermIndex& index);

struct AnalyzerConfig {
  std::string command;  // empty: use the fallback extractor
  std::chrono::seconds timeout{60};
};

// Terms referenced by `source`. With an analyzer command, the source is
// piped to it and its output (a JSON array of names, or one name per line)
// is used verbatim; the call goes through `gateway` when given.
std::vector<std::string> extract_terms(std::string_view source, const TermIndex& index,
                                       const AnalyzerConfig& analyzer = {}, Gateway* gateway = nullptr);

// Exact-name lookup; absent names yield a record with only the name and
// `unknown` set.
std::vector<TermInfo> ground_terms(const std::vector<std::string>& names, const TermIndex& index);

// Parsed evaluator reply: `Match:` labels in item order, and the label of the
// missing/implicit-conditions section.
struct EvaluationParse {
  struct Item {
    std::string heading;
    std::optional<MatchLabel> label;
    std::string justification;
  };
  std::vector<Item> items;
  std::optional<Item> missing_check;
};
EvaluationParse parse_evaluation(std::string_view reply);

struct EvaluateOptions {
  bool include_terms = true;
};

// One report per subtask (and per any further item the reply contains),
// plus the missing-conditions report. Unparseable labels trigger one
// re-prompt, then default to MajorInconsistency.
std::vector<SubtaskReport> evaluate(const InformalStatement& informal, std::string_view formal_source,
                                    const SubtaskList& subtasks, const std::vector<TermInfo>& terms, LlmClient& llm,
                                    const Prompts& prompts = Prompts::defaults(), EvaluateOptions options = {});

// 0 with any major inconsistency, otherwise lambda^(number of minors).
double aggregate(const std::vector<MatchLabel>& labels, double lambda = 0.8);

// Strict: accepted iff score > alpha.
bool decide(double score, double alpha);

struct ScorerBackends {
  LlmClient& llm;
  const TermIndex* index = nullptr;
  Gateway* gateway = nullptr;
  AnalyzerConfig analyzer;
  const Prompts& prompts = Prompts::defaults();
  double lambda = 0.8;
  bool no_term_grounding = false;
};

ScoreReport score_statement(const InformalStatement& informal, std::string_view formal_source,
                            ScorerBackends& backends, double alpha);

nlohmann::json to_json(const SubtaskReport& r);
nlohmann::json to_json(const ScoreReport& r);

}  // namespace aria
