#include "aria/prompts.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aria {

namespace {

constexpr const char* kSystem =
    "You are an expert in Lean 4 and Mathlib who formalizes research mathematics.";

constexpr const char* kDecomposeRoot =
    "Statement: {{statement}}\n\n"
    "List the mathematical concepts (definitions, structures or classes) that this statement "
    "is built from. Write one concept per line in the form `name :: short description`.";

constexpr const char* kDecomposeKeywords =
    "Statement: {{statement}}\n\n"
    "Extract a flat list of the conceptual keywords of this statement. Write one keyword per "
    "line in the form `name :: short description`, or NONE if there are none.";

constexpr const char* kProposeDependencies =
    "Concept: {{concept}}\nDescription: {{gloss}}\n\n"
    "This concept has no canonical definition in Mathlib. List the immediate prerequisite "
    "concepts needed to define it, one per line in the form `name :: short description`. "
    "Answer NONE if it can be defined directly.";

constexpr const char* kConceptFormatReminder =
    "Your previous answer could not be parsed. Reply with one concept per line, each line "
    "exactly `name :: short description`, and nothing else.";

constexpr const char* kGroundSelect =
    "Concept: {{concept}}\nDescription: {{gloss}}\n\n"
    "Candidate Mathlib declarations:\n{{candidates}}\n"
    "Which candidate is the canonical definition of this concept? Answer with the candidate "
    "number only, or NONE if no candidate is suitable.";

constexpr const char* kGroundReminder =
    "Answer with a single candidate number between 1 and {{count}}, or NONE. No other text.";

constexpr const char* kGroundRecall =
    "Concept: {{concept}}\nDescription: {{gloss}}\n\n"
    "Recall the fully qualified Mathlib name of the canonical definition of this concept. "
    "Answer with the name only, or NONE if Mathlib has no such definition.";

constexpr const char* kSynthesizeDefinition =
    "Target concept: {{concept}}\nDescription: {{gloss}}\n\n"
    "Mathlib declarations you may use:\n{{grounded}}\n"
    "Verified definitions already available (do not redefine them):\n{{code}}\n"
    "Write a Lean 4 definition for the target concept. Put the code in a single fenced "
    "```lean block.";

constexpr const char* kSynthesizeTheorem =
    "Statement: {{statement}}\n\n"
    "Mathlib declarations you may use:\n{{grounded}}\n"
    "Verified definitions already available (do not redefine them):\n{{code}}\n"
    "Write the Lean 4 theorem stating this result. End the proof with `sorry`. Put the code "
    "in a single fenced ```lean block.";

constexpr const char* kReflect =
    "{{task}}\n\n"
    "Your previous attempt failed to compile:\n```lean\n{{previous}}\n```\n"
    "Compiler messages:\n{{diagnostics}}\n"
    "Fix the code and reply with the corrected version in a single fenced ```lean block.";

constexpr const char* kScorerDecompose =
    "Informal statement: {{informal}}\n\n"
    "Decompose the statement into atomic assumptions and conclusions. Reply with a "
    "`Conditions:` numbered list followed by a `Conclusions:` numbered list.";

constexpr const char* kScorerDecomposeReminder =
    "Reply again using exactly two sections, `Conditions:` and `Conclusions:`, each a "
    "numbered list.";

constexpr const char* kScorerEvaluate =
    "{{fewshot}}"
    "Informal statement: {{informal}}\n\n"
    "Formal statement:\n```lean\n{{formal}}\n```\n\n"
    "Conditions and conclusions:\n{{subtasks}}\n"
    "{{terms}}"
    "Compare the mathematical conditions and conclusions with the Lean 4 formal statement one "
    "by one. For each item give `Math:`, `Lean:` and a line `Match: Perfectly match.`, "
    "`Match: Minor inconsistency.` or `Match: Major inconsistency.`. Finish with a section "
    "`Check for missing conditions / implicit conditions:` ending in its own `Match:` line.";

constexpr const char* kScorerTerms =
    "Retrieved Lean terms (authoritative Mathlib definitions):\n{{records}}\n";

constexpr const char* kScorerEvaluateReminder =
    "Some items had no recognizable `Match:` line. Repeat the comparison, giving every item "
    "and the missing-conditions check a `Match:` line.";

}  // namespace

Prompts::Prompts() {
  templates_ = {
      {"system", kSystem},
      {"decompose_root", kDecomposeRoot},
      {"decompose_keywords", kDecomposeKeywords},
      {"propose_dependencies", kProposeDependencies},
      {"concept_format_reminder", kConceptFormatReminder},
      {"ground_select", kGroundSelect},
      {"ground_reminder", kGroundReminder},
      {"ground_recall", kGroundRecall},
      {"synthesize_definition", kSynthesizeDefinition},
      {"synthesize_theorem", kSynthesizeTheorem},
      {"reflect", kReflect},
      {"scorer_decompose", kScorerDecompose},
      {"scorer_decompose_reminder", kScorerDecomposeReminder},
      {"scorer_evaluate", kScorerEvaluate},
      {"scorer_terms", kScorerTerms},
      {"scorer_evaluate_reminder", kScorerEvaluateReminder},
      {"scorer_fewshot", ""},
  };
}

void Prompts::load_overrides(const std::filesystem::path& dir) {
  for (auto& [name, text] : templates_) {
    std::ifstream in(dir / (name + ".txt"));
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
}

const std::string& Prompts::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw std::out_of_range("no prompt template '" + std::string(name) + "'");
  return it->second;
}

void Prompts::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

std::string Prompts::render(std::string_view name, const std::map<std::string, std::string>& values) const {
  return render_template(get(name), values);
}

const Prompts& Prompts::defaults() {
  static const Prompts instance;
  return instance;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    std::string key(tmpl.substr(open + 2, close - open - 2));
    if (auto it = values.find(key); it != values.end())
      out.append(it->second);
    else
      out.append(tmpl.substr(open, close + 2 - open));
    i = close + 2;
  }
  return out;
}

}  // namespace aria
