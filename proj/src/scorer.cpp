#include "aria/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aria/errors.hpp"
#include "aria/process.hpp"

namespace aria {

using nlohmann::json;

std::vector<std::string> SubtaskList::all() const {
  std::vector<std::string> out = conditions;
  out.insert(out.end(), conclusions.begin(), conclusions.end());
  return out;
}

std::string_view to_string(MatchLabel label) {
  switch (label) {
    case MatchLabel::PerfectMatch: return "PerfectMatch";
    case MatchLabel::MinorInconsistency: return "MinorInconsistency";
    case MatchLabel::MajorInconsistency: return "MajorInconsistency";
  }
  return "?";
}

std::optional<MatchLabel> parse_match_label(std::string_view text) {
  std::string t = canonicalize(text);
  if (t.find("perfect") != std::string::npos) return MatchLabel::PerfectMatch;
  if (t.find("minor") != std::string::npos) return MatchLabel::MinorInconsistency;
  if (t.find("major") != std::string::npos) return MatchLabel::MajorInconsistency;
  return std::nullopt;
}

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::size_t indent_of(std::string_view line) {
  std::size_t n = 0;
  for (char c : line) {
    if (c == ' ')
      ++n;
    else if (c == '\t')
      n += 4;
    else
      break;
  }
  return n;
}

// Returns the item text when `line` starts with a list marker.
std::optional<std::string> list_item(std::string_view line) {
  static const std::regex marker(R"(^\s*(?:[-*+]|\xE2\x80\xA2|\d+[.)]|\(\d+\)|[a-z][.)])\s+(.*)$)");
  std::string s(line);
  std::smatch m;
  if (std::regex_match(s, m, marker)) return trim(m[1].str());
  return std::nullopt;
}

std::string strip_emphasis(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '*' || c == '#' || c == '_'; }), s.end());
  return trim(s);
}

enum class Section { None, Conditions, Conclusions };

std::optional<Section> section_heading(std::string_view line) {
  std::string t = canonicalize(strip_emphasis(std::string(line)));
  auto starts = [&](std::string_view w) { return t.rfind(w, 0) == 0; };
  if (starts("conditions:") || starts("condition:") || t == "conditions" || t == "condition")
    return Section::Conditions;
  if (starts("conclusions:") || starts("conclusion:") || t == "conclusions" || t == "conclusion")
    return Section::Conclusions;
  return std::nullopt;
}

std::string after_colon(std::string_view line) {
  std::string s = strip_emphasis(std::string(line));
  auto c = s.find(':');
  return c == std::string::npos ? std::string() : trim(s.substr(c + 1));
}

}  // namespace

std::optional<SubtaskList> parse_subtasks(std::string_view reply) {
  SubtaskList out;
  Section section = Section::None;
  std::optional<std::size_t> top_indent;
  std::vector<std::string>* current = nullptr;
  bool item_open = false;

  for (const auto& line : split_lines(reply)) {
    if (auto s = section_heading(line)) {
      section = *s;
      current = section == Section::Conditions ? &out.conditions : &out.conclusions;
      top_indent.reset();
      item_open = false;
      // An item written on the heading line itself: "Condition: Let R be ...".
      if (auto inline_text = after_colon(line); !inline_text.empty()) {
        current->push_back(inline_text);
        item_open = true;
      }
      continue;
    }
    if (section == Section::None || trim(line).empty()) continue;
    auto item = list_item(line);
    std::size_t indent = indent_of(line);
    if (item && (!top_indent || indent <= *top_indent)) {
      top_indent = indent;
      current->push_back(*item);
      item_open = true;
    } else if (item_open) {
      current->back() += " " + (item ? *item : trim(line));
    }
  }
  if (out.size() == 0) return std::nullopt;
  return out;
}

SubtaskList decompose_subtasks(const InformalStatement& informal, LlmClient& llm, const Prompts& prompts) {
  informal.validate();
  std::vector<Message> messages = {{Role::System, prompts.get("system")},
                                   {Role::User, prompts.render("scorer_decompose", {{"informal", informal.text}})}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = llm.complete(llm.request(Purpose::ScorerDecompose, messages)).text;
    if (auto parsed = parse_subtasks(reply)) return *parsed;
    messages.push_back({Role::Assistant, reply});
    messages.push_back({Role::User, prompts.get("scorer_decompose_reminder")});
  }
  throw ScorerFailed("could not decompose statement '" + informal.id + "' into subtasks");
}

namespace {

const std::set<std::string, std::less<>>& lean_keywords() {
  static const std::set<std::string, std::less<>> k = {
      "import", "open", "namespace", "section", "end", "variable", "universe", "theorem", "lemma", "def",
      "abbrev", "instance", "class", "structure", "inductive", "where", "extends", "noncomputable", "local",
      "private", "protected", "let", "in", "fun", "by", "have", "show", "from", "with", "match", "if", "then",
      "else", "do", "sorry", "Type", "Prop", "Sort", "at", "set_option", "example", "deriving", "mutual"};
  return k;
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\'' || c == '!' || c == '?' || c >= 0x80; }

// Removes comments and string literals, keeping newlines.
std::string strip_comments(std::string_view src) {
  std::string out;
  std::size_t i = 0;
  int block = 0;
  while (i < src.size()) {
    if (block > 0) {
      if (src.compare(i, 2, "/-") == 0) {
        ++block;
        i += 2;
      } else if (src.compare(i, 2, "-/") == 0) {
        --block;
        i += 2;
      } else {
        if (src[i] == '\n') out.push_back('\n');
        ++i;
      }
      continue;
    }
    if (src.compare(i, 2, "/-") == 0) {
      block = 1;
      i += 2;
    } else if (src.compare(i, 2, "--") == 0) {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (src[i] == '"') {
      ++i;
      while (i < src.size() && src[i] != '"') i += src[i] == '\\' ? 2 : 1;
      ++i;
      out.push_back(' ');
    } else {
      out.push_back(src[i++]);
    }
  }
  return out;
}

struct Token {
  std::string text;
  bool ident = false;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    unsigned char c = static_cast<unsigned char>(src[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    // Non-ASCII symbols such as ∀, ∃, λ are tokens of their own.
    if (c >= 0x80) {
      std::size_t len = (c >= 0xF0) ? 4 : (c >= 0xE0) ? 3 : (c >= 0xC0) ? 2 : 1;
      std::string sym(src.substr(i, len));
      static const std::set<std::string> binders = {"\xE2\x88\x80", "\xE2\x88\x83", "\xCE\xBB"};  // ∀ ∃ λ
      if (binders.count(sym)) {
        out.push_back({sym, false});
        i += len;
        continue;
      }
    }
    if (ident_start(c)) {
      std::size_t j = i;
      // Identifier chain: parts separated by single dots.
      while (true) {
        while (j < src.size() && ident_char(static_cast<unsigned char>(src[j]))) {
          unsigned char d = static_cast<unsigned char>(src[j]);
          if (d >= 0x80) {
            // Stop at math symbols; letters such as α continue the name.
            std::size_t len = (d >= 0xF0) ? 4 : (d >= 0xE0) ? 3 : 2;
            std::string sym(src.substr(j, len));
            bool greek = len == 2 && (sym[0] == '\xCE' || sym[0] == '\xCF');
            bool subscript = len == 3 && sym.compare(0, 2, "\xE2\x82") == 0;
            if (!greek && !subscript) break;
            j += len;
            continue;
          }
          ++j;
        }
        if (j + 1 < src.size() && src[j] == '.' && ident_start(static_cast<unsigned char>(src[j + 1])) &&
            static_cast<unsigned char>(src[j + 1]) < 0x80) {
          ++j;
          continue;
        }
        break;
      }
      if (j == i) {
        ++i;
        continue;
      }
      out.push_back({std::string(src.substr(i, j - i)), true});
      i = j;
      continue;
    }
    out.push_back({std::string(1, static_cast<char>(c)), false});
    ++i;
  }
  return out;
}

// Names bound by binders, `let`, quantifiers and `fun`.
std::set<std::string> bound_locals(const std::vector<Token>& toks) {
  std::set<std::string> locals;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i].text;
    if (t == "(" || t == "{" || t == "[") {
      std::vector<std::string> names;
      std::size_t j = i + 1;
      while (j < toks.size() && toks[j].ident && toks[j].text.find('.') == std::string::npos) {
        names.push_back(toks[j].text);
        ++j;
      }
      if (j < toks.size() && toks[j].text == ":" && !names.empty()) locals.insert(names.begin(), names.end());
    } else if (t == "let" || t == "fun" || t == "\xE2\x88\x80" || t == "\xE2\x88\x83" || t == "\xCE\xBB") {
      std::size_t j = i + 1;
      if (j < toks.size() && toks[j].text == "(") ++j;
      while (j < toks.size() && toks[j].ident && toks[j].text.find('.') == std::string::npos) {
        locals.insert(toks[j].text);
        ++j;
      }
    }
  }
  return locals;
}

}  // namespace

std::vector<std::string> lexical_terms(std::string_view source, const TermIndex& index) {
  auto toks = tokenize(strip_comments(source));
  auto locals = bound_locals(toks);
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto consider = [&](const std::string& name) {
    if (lean_keywords().count(name) || locals.count(name)) return;
    if (!index.find(name)) return;
    if (seen.insert(name).second) out.push_back(name);
  };
  for (const auto& t : toks) {
    if (!t.ident) continue;
    if (t.text.find('.') != std::string::npos) {
      // The chain itself and every proper prefix, longest first after the chain.
      std::string head = t.text.substr(0, t.text.find('.'));
      if (locals.count(head)) continue;
      std::vector<std::string> forms;
      std::string acc;
      std::istringstream parts(t.text);
      std::string part;
      while (std::getline(parts, part, '.')) {
        acc = acc.empty() ? part : acc + "." + part;
        forms.push_back(acc);
      }
      consider(forms.back());
      for (std::size_t k = 0; k + 1 < forms.size(); ++k) consider(forms[k]);
    } else if (std::isupper(static_cast<unsigned char>(t.text[0]))) {
      consider(t.text);
    }
  }
  return out;
}

std::vector<std::string> extract_terms(std::string_view source, const TermIndex& index,
                                       const AnalyzerConfig& analyzer, Gateway* gateway) {
  if (trim(source).empty()) throw std::invalid_argument("formal source is empty");
  if (analyzer.command.empty()) return lexical_terms(source, index);

  auto run = [&]() -> std::string {
    auto r = run_process(split_command(analyzer.command), std::string(source), analyzer.timeout);
    if (r.timed_out) throw BackendUnavailable("analyzer timed out");
    if (r.exit_code != 0) throw BackendUnavailable("analyzer exited with status " + std::to_string(r.exit_code));
    return r.output;
  };
  std::string output;
  if (gateway) {
    json key = {{"kind", "analyze"}, {"command", analyzer.command}, {"source", source}};
    output = gateway->call(BackendKind::TermIndex, "analyze", key, run).payload;
  } else {
    output = run();
  }

  std::vector<std::string> names;
  std::string t = trim(output);
  if (!t.empty() && t.front() == '[') {
    try {
      for (const auto& n : json::parse(t)) names.push_back(n.get<std::string>());
      return names;
    } catch (const json::exception& e) {
      throw MalformedResponse(std::string("analyzer output: ") + e.what());
    }
  }
  for (const auto& line : split_lines(t))
    if (auto n = trim(line); !n.empty()) names.push_back(n);
  return names;
}

std::vector<TermInfo> ground_terms(const std::vector<std::string>& names, const TermIndex& index) {
  std::vector<TermInfo> out;
  for (const auto& n : names) {
    if (const auto* rec = index.find(n)) {
      out.push_back(*rec);
    } else {
      TermInfo t;
      t.name = n;
      t.unknown = true;
      out.push_back(std::move(t));
    }
  }
  return out;
}

namespace {

bool missing_heading(std::string_view line) {
  std::string t = canonicalize(strip_emphasis(std::string(line)));
  if (t.find("check for missing") != std::string::npos) return true;
  bool mentions = t.find("missing condition") != std::string::npos || t.find("implicit condition") != std::string::npos;
  return mentions && !t.empty() && t.back() == ':';
}

std::optional<std::string> match_line(std::string_view line) {
  std::string s = strip_emphasis(std::string(line));
  if (auto item = list_item(s)) s = *item;
  s = strip_emphasis(s);
  if (canonicalize(s).rfind("match:", 0) != 0) return std::nullopt;
  return trim(s.substr(s.find(':') + 1));
}

}  // namespace

EvaluationParse parse_evaluation(std::string_view reply) {
  EvaluationParse out;
  EvaluationParse::Item current;
  bool in_missing = false;
  bool have_heading = false;
  std::string body;

  for (const auto& line : split_lines(reply)) {
    if (!in_missing && missing_heading(line) && !match_line(line)) {
      in_missing = true;
      current = {};
      current.heading = "missing/implicit conditions";
      body.clear();
      continue;
    }
    if (auto label = match_line(line)) {
      current.label = parse_match_label(*label);
      current.justification = trim(body);
      if (in_missing) {
        if (!out.missing_check) out.missing_check = current;
      } else {
        out.items.push_back(current);
      }
      current = {};
      have_heading = false;
      body.clear();
      continue;
    }
    if (!in_missing && !have_heading && indent_of(line) < 2) {
      if (auto item = list_item(line)) {
        current.heading = strip_emphasis(*item);
        while (!current.heading.empty() && current.heading.back() == ':') current.heading.pop_back();
        have_heading = true;
        continue;
      }
    }
    if (auto t = trim(line); !t.empty()) body += (body.empty() ? "" : "\n") + t;
  }
  return out;
}

namespace {

std::string format_subtasks(const SubtaskList& s) {
  std::string out = "Conditions:\n";
  for (std::size_t i = 0; i < s.conditions.size(); ++i) out += std::to_string(i + 1) + ". " + s.conditions[i] + "\n";
  out += "Conclusions:\n";
  for (std::size_t i = 0; i < s.conclusions.size(); ++i)
    out += std::to_string(i + 1) + ". " + s.conclusions[i] + "\n";
  return out;
}

std::string format_terms(const std::vector<TermInfo>& terms) {
  std::string out;
  for (const auto& t : terms) {
    json j = t.unknown ? json{{"name", t.name}, {"unknown", true}} : to_json(t);
    out += j.dump() + "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

bool complete(const EvaluationParse& p, std::size_t expected) {
  if (p.items.size() < expected || !p.missing_check || !p.missing_check->label) return false;
  return std::all_of(p.items.begin(), p.items.end(), [](const auto& i) { return i.label.has_value(); });
}

}  // namespace

std::vector<SubtaskReport> evaluate(const InformalStatement& informal, std::string_view formal_source,
                                    const SubtaskList& subtasks, const std::vector<TermInfo>& terms, LlmClient& llm,
                                    const Prompts& prompts, EvaluateOptions options) {
  if (subtasks.size() == 0) throw std::invalid_argument("no subtasks to evaluate");
  std::string term_block =
      options.include_terms ? prompts.render("scorer_terms", {{"records", format_terms(terms)}}) : std::string();
  std::vector<Message> messages = {
      {Role::System, prompts.get("system")},
      {Role::User, prompts.render("scorer_evaluate", {{"fewshot", prompts.get("scorer_fewshot")},
                                                      {"informal", informal.text},
                                                      {"formal", std::string(formal_source)},
                                                      {"subtasks", format_subtasks(subtasks)},
                                                      {"terms", term_block}})}};
  EvaluationParse parsed;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = llm.complete(llm.request(Purpose::ScorerEvaluate, messages)).text;
    parsed = parse_evaluation(reply);
    if (complete(parsed, subtasks.size())) break;
    messages.push_back({Role::Assistant, reply});
    messages.push_back({Role::User, prompts.get("scorer_evaluate_reminder")});
  }

  auto texts = subtasks.all();
  std::vector<SubtaskReport> out;
  std::size_t n = std::max(texts.size(), parsed.items.size());
  for (std::size_t i = 0; i < n; ++i) {
    SubtaskReport r;
    r.subtask = i < texts.size() ? texts[i] : parsed.items[i].heading;
    if (i < parsed.items.size() && parsed.items[i].label) {
      r.label = *parsed.items[i].label;
      r.justification = parsed.items[i].justification;
    } else {
      r.label = MatchLabel::MajorInconsistency;
      r.justification = "unparseable";
    }
    out.push_back(std::move(r));
  }
  SubtaskReport missing;
  missing.subtask = "missing/implicit conditions";
  missing.missing_check = true;
  if (parsed.missing_check && parsed.missing_check->label) {
    missing.label = *parsed.missing_check->label;
    missing.justification = parsed.missing_check->justification;
  } else {
    missing.label = MatchLabel::MajorInconsistency;
    missing.justification = "unparseable";
  }
  out.push_back(std::move(missing));
  return out;
}

double aggregate(const std::vector<MatchLabel>& labels, double lambda) {
  if (labels.empty()) throw EmptyLabels("aggregate needs at least one label");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  int minors = 0;
  for (auto l : labels) {
    if (l == MatchLabel::MajorInconsistency) return 0.0;
    if (l == MatchLabel::MinorInconsistency) ++minors;
  }
  return std::pow(lambda, minors);
}

bool decide(double score, double alpha) {
  if (!(score >= 0.0 && score <= 1.0)) throw std::invalid_argument("score must lie in [0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  return score > alpha;
}

ScoreReport score_statement(const InformalStatement& informal, std::string_view formal_source,
                            ScorerBackends& backends, double alpha) {
  ScoreReport report;
  report.alpha = alpha;
  report.subtasks = decompose_subtasks(informal, backends.llm, backends.prompts);
  if (!backends.no_term_grounding) {
    if (!backends.index) throw IndexUnavailable("term grounding requires a term index");
    auto names = extract_terms(formal_source, *backends.index, backends.analyzer, backends.gateway);
    report.terms = ground_terms(names, *backends.index);
  }
  report.reports = evaluate(informal, formal_source, report.subtasks, report.terms, backends.llm, backends.prompts,
                            {!backends.no_term_grounding});
  std::vector<MatchLabel> labels;
  for (const auto& r : report.reports) labels.push_back(r.label);
  report.score = aggregate(labels, backends.lambda);
  report.accepted = decide(report.score, alpha);
  return report;
}

json to_json(const SubtaskReport& r) {
  json j = {{"subtask", r.subtask}, {"label", to_string(r.label)}, {"justification", r.justification}};
  if (r.missing_check) j["missing_check"] = true;
  return j;
}

json to_json(const ScoreReport& r) {
  json reports = json::array(), terms = json::array();
  for (const auto& x : r.reports) reports.push_back(to_json(x));
  for (const auto& t : r.terms) {
    json j = to_json(t);
    if (t.unknown) j["unknown"] = true;
    terms.push_back(j);
  }
  return {{"score", r.score},
          {"alpha", r.alpha},
          {"accepted", r.accepted},
          {"reports", reports},
          {"subtasks", {{"conditions", r.subtasks.conditions}, {"conclusions", r.subtasks.conclusions}}},
          {"terms", terms}};
}

}  // namespace aria
