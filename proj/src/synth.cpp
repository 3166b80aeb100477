#include "aria/synth.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

void ReflectionPolicy::validate() const {
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

namespace {

bool resolved(NodeStatus s) { return s == NodeStatus::Grounded || s == NodeStatus::Synthesized; }

void add_dependency(SynthesisContext& ctx, const ConceptNode& n) {
  if (n.status == NodeStatus::Grounded)
    ctx.grounded_refs.push_back({n.grounding->formal_name, n.grounding->formal_statement});
  else if (n.status == NodeStatus::Synthesized)
    ctx.synthesized_code.push_back(n.artifact->source);
}

SynthesisContext context_over(NodeId id, const DependencyGraph& graph, const std::set<NodeId>& members,
                              bool strict) {
  SynthesisContext ctx;
  if (id == graph.root())
    ctx.target = InformalStatement{graph.node(id).subject.name, graph.node(id).subject.gloss, std::nullopt};
  else
    ctx.target = graph.node(id).subject;
  for (NodeId dep : graph.topological_order()) {
    if (!members.count(dep)) continue;
    const auto& n = graph.node(dep);
    if (!resolved(n.status)) {
      if (strict)
        throw DependencyUnresolved("'" + graph.node(id).subject.name + "' depends on '" + n.subject.name +
                                   "' which is " + std::string(to_string(n.status)));
      continue;
    }
    add_dependency(ctx, n);
  }
  return ctx;
}

std::string list_refs(const SynthesisContext& ctx) {
  if (ctx.grounded_refs.empty()) return "(none)\n";
  std::string out;
  for (const auto& r : ctx.grounded_refs) out += "- " + r.formal_name + " : " + r.formal_statement + "\n";
  return out;
}

std::string list_code(const SynthesisContext& ctx) {
  if (ctx.synthesized_code.empty()) return "(none)\n";
  std::string out = "```lean\n";
  for (std::size_t i = 0; i < ctx.synthesized_code.size(); ++i) {
    if (i) out += "\n";
    out += ctx.synthesized_code[i] + "\n";
  }
  return out + "```\n";
}

std::string format_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds)
    out += std::to_string(d.line) + ":" + std::to_string(d.column) + ": " + std::string(to_string(d.severity)) +
           ": " + d.message + "\n";
  return out.empty() ? "(none)\n" : out;
}

bool ends_with_sorry(std::string_view code) {
  std::string t = trim(code);
  constexpr std::string_view tok = "sorry";
  if (t.size() < tok.size() || t.compare(t.size() - tok.size(), tok.size(), tok) != 0) return false;
  if (t.size() == tok.size()) return true;
  unsigned char before = static_cast<unsigned char>(t[t.size() - tok.size() - 1]);
  return !(std::isalnum(before) || before == '_' || before == '.');
}

ArtifactKind kind_of(std::string_view code) {
  std::istringstream in{std::string(code)};
  std::string word;
  while (in >> word) {
    if (word == "instance") return ArtifactKind::Instance;
    if (word == "theorem" || word == "lemma") return ArtifactKind::Theorem;
    if (word == "def" || word == "class" || word == "structure" || word == "abbrev" || word == "inductive")
      return ArtifactKind::Definition;
  }
  return ArtifactKind::Definition;
}

int line_count(std::string_view s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

SynthesisContext assemble_context(NodeId id, const DependencyGraph& graph) {
  return context_over(id, graph, graph.dependencies(id), true);
}

SynthesisContext assemble_available_context(NodeId id, const DependencyGraph& graph) {
  return context_over(id, graph, graph.dependency_closure(id), false);
}

std::optional<std::string> extract_code_block(std::string_view reply) {
  std::vector<std::size_t> fences;
  std::size_t pos = 0;
  while ((pos = reply.find("```", pos)) != std::string_view::npos) {
    fences.push_back(pos);
    pos += 3;
  }
  if (fences.size() < 2) return std::nullopt;
  std::size_t pairs = fences.size() / 2;
  std::size_t open = fences[2 * (pairs - 1)] + 3;
  std::size_t close = fences[2 * (pairs - 1) + 1];
  std::string_view body = reply.substr(open, close - open);
  auto nl = body.find('\n');
  if (nl == std::string_view::npos) {
    std::string inline_body = trim(body);
    if (inline_body.empty()) return std::nullopt;
    return inline_body;
  }
  // The first line is the language tag, if any.
  body = body.substr(nl + 1);
  std::string code(body);
  while (!code.empty() && std::isspace(static_cast<unsigned char>(code.back()))) code.pop_back();
  while (!code.empty() && code.front() == '\n') code.erase(code.begin());
  if (trim(code).empty()) return std::nullopt;
  return code;
}

std::string compile_unit(std::string_view header, const std::vector<std::string>& blocks,
                         std::string_view candidate) {
  std::string out(header);
  out += "\n\n";
  for (const auto& b : blocks) out += b + "\n\n";
  out += candidate;
  out += "\n";
  return out;
}

std::vector<std::string> synthesized_closure(NodeId id, const DependencyGraph& graph) {
  auto closure = graph.dependency_closure(id);
  std::vector<std::string> out;
  for (NodeId n : graph.topological_order())
    if (closure.count(n) && graph.node(n).status == NodeStatus::Synthesized)
      out.push_back(graph.node(n).artifact->source);
  return out;
}

NodeOutcome synthesize_node(NodeId id, DependencyGraph& graph, const SynthesisContext& context,
                            SynthesisBackends& backends, const ReflectionPolicy& policy) {
  policy.validate();
  const bool is_root = id == graph.root();
  const auto& node = graph.node(id);
  if (!is_root && node.status != NodeStatus::NeedsSynthesis)
    throw std::logic_error("node '" + node.subject.name + "' is not awaiting synthesis");

  NodeOutcome outcome{id, node.subject.name, node.status, 0, std::nullopt};
  auto emit = [&](std::string_view name, json fields) {
    if (backends.transcript) backends.transcript->event(name, std::move(fields));
  };
  emit("synth_begin", {{"node", id.str()}, {"name", node.subject.name}});

  std::string task;
  if (is_root) {
    const auto* st = std::get_if<InformalStatement>(&context.target);
    task = backends.prompts.render("synthesize_theorem", {{"statement", st ? st->text : node.subject.gloss},
                                                          {"grounded", list_refs(context)},
                                                          {"code", list_code(context)}});
  } else {
    task = backends.prompts.render("synthesize_definition", {{"concept", node.subject.name},
                                                             {"gloss", node.subject.gloss},
                                                             {"grounded", list_refs(context)},
                                                             {"code", list_code(context)}});
  }
  const auto prefix = synthesized_closure(id, graph);
  const int offset = line_count(compile_unit(backends.header, prefix, "")) - 1;

  auto finish = [&](NodeStatus status, std::optional<std::string> failure) {
    outcome.status = status;
    outcome.failure = std::move(failure);
    json fields = {{"node", id.str()}, {"name", node.subject.name}, {"status", to_string(status)},
                   {"attempts", outcome.attempts}};
    if (outcome.failure) fields["failure"] = *outcome.failure;
    emit("synth_end", std::move(fields));
    return outcome;
  };

  std::optional<FormalArtifact> last;
  const int budget = policy.effective_attempts();
  try {
    for (int attempt = 1; attempt <= budget; ++attempt) {
      outcome.attempts = attempt;
      std::string prompt = task;
      Purpose purpose = Purpose::Synthesize;
      if (last) {
        purpose = Purpose::Reflect;
        prompt = backends.prompts.render("reflect", {{"task", task},
                                                     {"previous", last->source},
                                                     {"diagnostics", format_diagnostics(last->diagnostics)}});
      }
      auto reply = backends.llm
                       .complete(backends.llm.request(
                           purpose, {{Role::System, backends.prompts.get("system")}, {Role::User, prompt}}))
                       .text;
      auto code = extract_code_block(reply);
      FormalArtifact artifact;
      artifact.kind = is_root ? ArtifactKind::Theorem : ArtifactKind::Definition;
      artifact.compile = CompileStatus::Error;
      if (!code) {
        artifact.source = trim(reply);
        artifact.diagnostics = {{Severity::Error, 1, 0, "no code block"}};
        last = std::move(artifact);
        continue;
      }
      artifact.source = *code;
      if (!is_root) artifact.kind = kind_of(*code);
      if (is_root && !ends_with_sorry(*code)) {
        artifact.diagnostics = {{Severity::Error, std::max(1, line_count(*code) + 1), 0,
                                 "the theorem must end with `sorry`"}};
        last = std::move(artifact);
        continue;
      }
      auto result = backends.compiler.check(compile_unit(backends.header, prefix, *code));
      // Report positions relative to the candidate where they fall inside it.
      for (auto d : result.diagnostics) {
        if (d.line > offset) d.line -= offset;
        artifact.diagnostics.push_back(std::move(d));
      }
      if (result.success) {
        artifact.compile = CompileStatus::Ok;
        graph.mark_synthesized(id, std::move(artifact));
        return finish(NodeStatus::Synthesized, std::nullopt);
      }
      last = std::move(artifact);
    }
  } catch (const BackendUnavailable& e) {
    spdlog::warn("synthesis of '{}' aborted: {}", node.subject.name, e.what());
    graph.mark_failed(id, "backend", last);
    return finish(NodeStatus::Failed, "backend");
  } catch (const MalformedResponse& e) {
    spdlog::warn("synthesis of '{}' aborted: {}", node.subject.name, e.what());
    graph.mark_failed(id, "backend", last);
    return finish(NodeStatus::Failed, "backend");
  }
  graph.mark_failed(id, "max attempts", last);
  return finish(NodeStatus::Failed, "max attempts");
}

std::string_view to_string(FinalStatus status) {
  return status == FinalStatus::Compiled ? "Compiled" : "PartialFailure";
}

FinalResult synthesize_graph(DependencyGraph& graph, const InformalStatement& statement,
                             SynthesisBackends& backends, const ReflectionPolicy& policy) {
  policy.validate();
  FinalResult result;
  const NodeId root = graph.root();
  auto outcome_of = [&](NodeId id, int attempts) {
    const auto& n = graph.node(id);
    return NodeOutcome{id, n.subject.name, n.status, attempts, n.failure};
  };

  for (NodeId id : graph.topological_order()) {
    if (id == root) continue;
    const auto& n = graph.node(id);
    if (n.status != NodeStatus::NeedsSynthesis) {
      if (n.status == NodeStatus::Pending) graph.mark_failed(id, "unplanned");
      result.outcomes.push_back(outcome_of(id, 0));
      continue;
    }
    SynthesisContext ctx;
    try {
      ctx = assemble_context(id, graph);
    } catch (const DependencyUnresolved& e) {
      graph.mark_failed(id, std::string("dependency unresolved: ") + e.what());
      if (backends.transcript)
        backends.transcript->event("synth_skip", {{"node", id.str()}, {"name", n.subject.name}});
      result.outcomes.push_back(outcome_of(id, 0));
      continue;
    }
    result.outcomes.push_back(synthesize_node(id, graph, ctx, backends, policy));
  }

  auto ctx = assemble_available_context(root, graph);
  ctx.target = statement;
  auto root_outcome = synthesize_node(root, graph, ctx, backends, policy);
  result.outcomes.push_back(root_outcome);

  auto closure = graph.dependency_closure(root);
  for (NodeId id : graph.topological_order())
    if (closure.count(id) && graph.node(id).status == NodeStatus::Failed) result.failure_chain.push_back(outcome_of(id, 0));
  for (auto& f : result.failure_chain)
    for (const auto& o : result.outcomes)
      if (o.id == f.id) f.attempts = o.attempts;
  if (graph.node(root).status == NodeStatus::Failed) result.failure_chain.push_back(root_outcome);

  const auto& r = graph.node(root);
  std::string theorem;
  if (r.artifact) theorem = r.artifact->source;
  result.file = compile_unit(backends.header, synthesized_closure(root, graph), theorem);
  result.status = r.status == NodeStatus::Synthesized && result.failure_chain.empty() ? FinalStatus::Compiled
                                                                                     : FinalStatus::PartialFailure;
  return result;
}

json to_json(const NodeOutcome& o) {
  json j = {{"node", o.id.str()}, {"name", o.name}, {"status", to_string(o.status)}, {"attempts", o.attempts}};
  if (o.failure) j["failure"] = *o.failure;
  return j;
}

json to_json(const FinalResult& r) {
  json outcomes = json::array(), chain = json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(to_json(o));
  for (const auto& o : r.failure_chain) chain.push_back(to_json(o));
  return {{"status", to_string(r.status)}, {"outcomes", outcomes}, {"failure_chain", chain}};
}

}  // namespace aria
