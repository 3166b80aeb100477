#include <gtest/gtest.h>

#include "aria/errors.hpp"
#include "aria/synth.hpp"
#include "support.hpp"

using namespace aria;

namespace {

const InformalStatement kStmt{"koethe", "If R has no non-zero nil ideal then it has no non-zero nil one-sided ideal.",
                              std::nullopt};

GroundingCandidate cand(std::string name, std::string stmt = "") {
  return {std::move(name), std::move(stmt), "", 1, std::nullopt};
}

struct Fixture {
  DependencyGraph graph{Concept::make("statement koethe", kStmt.text)};
  NodeId nil, ideal, nilpotent;

  Fixture() {
    nil = graph.add_node(Concept::make("nil ideal", "every element is nilpotent"));
    ideal = graph.add_node(Concept::make("ideal"), nil);
    nilpotent = graph.add_node(Concept::make("nilpotent element"), nil);
    graph.mark_grounded(ideal, cand("Ideal", "Ideal (R : Type u) [Semiring R] : Type u"));
    graph.mark_grounded(nilpotent, cand("IsNilpotent"));
    graph.mark_needs_synthesis(nil);
  }
};

ScriptedLlm::Entry reply(Purpose p, const std::string& code) { return {p, std::nullopt, test::lean_reply(code), false, false}; }

}  // namespace

TEST(CodeBlock, Extraction) {
  EXPECT_EQ(extract_code_block("x\n```lean\ndef A := 1\n```\n"), "def A := 1");
  EXPECT_EQ(extract_code_block("```lean\nfirst\n```\nthen\n```\nsecond\n```"), "second");
  EXPECT_EQ(extract_code_block("no fences"), std::nullopt);
  EXPECT_EQ(extract_code_block("```lean\n\n```"), std::nullopt);
}

TEST(CompileUnit, Layout) {
  EXPECT_EQ(compile_unit("import Mathlib", {"def A := 1", "def B := A"}, "theorem t : True := sorry"),
            "import Mathlib\n\ndef A := 1\n\ndef B := A\n\ntheorem t : True := sorry\n");
  EXPECT_EQ(compile_unit("import Mathlib", {}, "x"), "import Mathlib\n\nx\n");
}

TEST(Context, ImmediateDependencies) {
  Fixture f;
  auto ctx = assemble_context(f.nil, f.graph);
  ASSERT_EQ(ctx.grounded_refs.size(), 2u);
  std::set<std::string> names;
  for (const auto& r : ctx.grounded_refs) names.insert(r.formal_name);
  EXPECT_EQ(names, (std::set<std::string>{"Ideal", "IsNilpotent"}));
  EXPECT_TRUE(ctx.synthesized_code.empty());
}

TEST(Context, UnresolvedDependency) {
  Fixture f;
  auto extra = f.graph.add_node(Concept::make("jacobson radical"), f.nil);
  EXPECT_THROW(assemble_context(f.nil, f.graph), DependencyUnresolved);
  f.graph.mark_failed(extra, "budget");
  EXPECT_THROW(assemble_context(f.nil, f.graph), DependencyUnresolved);
}

TEST(Context, SynthesizedCodeIncluded) {
  Fixture f;
  f.graph.mark_synthesized(f.nil, FormalArtifact{ArtifactKind::Definition, "def IsNil := 1", CompileStatus::Ok, {}});
  auto ctx = assemble_available_context(f.graph.root(), f.graph);
  EXPECT_EQ(ctx.synthesized_code, std::vector<std::string>{"def IsNil := 1"});
  EXPECT_EQ(ctx.grounded_refs.size(), 2u);
}

TEST(Reflection, KFailuresThenSuccess) {
  for (int k = 0; k <= 15; ++k) {
    Fixture f;
    test::Stack s;
    for (int i = 0; i <= k; ++i) {
      s.llm_backend.push(reply(i == 0 ? Purpose::Synthesize : Purpose::Reflect, "def IsNil := " + std::to_string(i)));
      s.compiler_backend.push(i < k ? ScriptedCompiler::error(3, "unknown constant") : ScriptedCompiler::ok());
    }
    SynthesisBackends b{s.llm, s.compiler};
    auto out = synthesize_node(f.nil, f.graph, assemble_context(f.nil, f.graph), b, ReflectionPolicy{});
    ASSERT_EQ(out.status, NodeStatus::Synthesized) << "k=" << k;
    EXPECT_EQ(out.attempts, k + 1);
    EXPECT_EQ(s.count("compiler"), static_cast<std::size_t>(k + 1));
    EXPECT_EQ(s.count("llm", "Reflect"), static_cast<std::size_t>(k));
    EXPECT_EQ(f.graph.node(f.nil).artifact->source, "def IsNil := " + std::to_string(k));
    EXPECT_EQ(f.graph.node(f.nil).artifact->compile, CompileStatus::Ok);
  }
}

TEST(Reflection, ExhaustsAfterSixteen) {
  Fixture f;
  test::Stack s;
  for (int i = 0; i < 16; ++i) {
    s.llm_backend.push(reply(i == 0 ? Purpose::Synthesize : Purpose::Reflect, "def IsNil := " + std::to_string(i)));
    s.compiler_backend.push(ScriptedCompiler::error(1, "nope"));
  }
  SynthesisBackends b{s.llm, s.compiler};
  auto out = synthesize_node(f.nil, f.graph, assemble_context(f.nil, f.graph), b, ReflectionPolicy{});
  EXPECT_EQ(out.status, NodeStatus::Failed);
  EXPECT_EQ(out.failure, "max attempts");
  EXPECT_EQ(out.attempts, 16);
  EXPECT_EQ(s.count("compiler"), 16u);
  EXPECT_EQ(s.llm_backend.remaining(), 0u);
  ASSERT_TRUE(f.graph.node(f.nil).artifact);
  EXPECT_EQ(f.graph.node(f.nil).artifact->source, "def IsNil := 15");
}

TEST(Reflection, ReflectPromptCarriesDiagnostics) {
  Fixture f;
  test::Stack s;
  s.llm_backend.push(reply(Purpose::Synthesize, "def IsNil := bad"));
  s.llm_backend.push({Purpose::Reflect, std::string("unknown identifier 'bad'"), test::lean_reply("def IsNil := 1"), false,
                      false});
  s.compiler_backend.push(ScriptedCompiler::error(3, "unknown identifier 'bad'"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto out = synthesize_node(f.nil, f.graph, assemble_context(f.nil, f.graph), b, ReflectionPolicy{});
  EXPECT_EQ(out.status, NodeStatus::Synthesized);
}

TEST(Reflection, DisabledMeansOneAttempt) {
  Fixture f;
  test::Stack s;
  s.llm_backend.push(reply(Purpose::Synthesize, "def IsNil := 0"));
  s.llm_backend.push(reply(Purpose::Reflect, "def IsNil := 1"));
  s.compiler_backend.push(ScriptedCompiler::error(3, "x"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto out = synthesize_node(f.nil, f.graph, assemble_context(f.nil, f.graph), b, ReflectionPolicy{16, false});
  EXPECT_EQ(out.status, NodeStatus::Failed);
  EXPECT_EQ(out.attempts, 1);
  EXPECT_EQ(s.count("compiler"), 1u);
  EXPECT_EQ(s.count("llm", "Reflect"), 0u);
}

TEST(Reflection, InvalidPolicy) {
  EXPECT_THROW(ReflectionPolicy({0, true}).validate(), std::invalid_argument);
  EXPECT_EQ(ReflectionPolicy({7, false}).effective_attempts(), 1);
}

TEST(Reflection, MissingCodeBlockCountsAsAttempt) {
  Fixture f;
  test::Stack s;
  s.llm_backend.push({Purpose::Synthesize, std::nullopt, "I would define it as a predicate.", false, false});
  s.llm_backend.push(reply(Purpose::Reflect, "def IsNil := 1"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto out = synthesize_node(f.nil, f.graph, assemble_context(f.nil, f.graph), b, ReflectionPolicy{});
  EXPECT_EQ(out.attempts, 2);
  EXPECT_EQ(s.count("compiler"), 1u);
}

TEST(Graph, AllGroundedGivesHeaderAndTheorem) {
  DependencyGraph g(Concept::make("statement koethe", kStmt.text));
  auto a = g.add_node(Concept::make("ring"));
  g.mark_grounded(a, cand("Ring"));
  test::Stack s;
  const std::string thm = "theorem koethe (R : Type*) [Ring R] : True := sorry";
  s.llm_backend.push(reply(Purpose::Synthesize, thm));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto r = synthesize_graph(g, kStmt, b, ReflectionPolicy{});
  EXPECT_EQ(r.status, FinalStatus::Compiled);
  EXPECT_EQ(r.file, "import Mathlib\n\n" + thm + "\n");
  EXPECT_TRUE(r.failure_chain.empty());
}

TEST(Graph, DefinitionsPrecedeTheorem) {
  Fixture f;
  test::Stack s;
  s.llm_backend.push(reply(Purpose::Synthesize, "def IsNil := 1"));
  s.llm_backend.push(reply(Purpose::Synthesize, "theorem t : True := sorry"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto r = synthesize_graph(f.graph, kStmt, b, ReflectionPolicy{});
  EXPECT_EQ(r.status, FinalStatus::Compiled);
  EXPECT_EQ(r.file, "import Mathlib\n\ndef IsNil := 1\n\ntheorem t : True := sorry\n");
}

TEST(Graph, RootMustEndInSorry) {
  DependencyGraph g(Concept::make("statement koethe", kStmt.text));
  test::Stack s;
  s.llm_backend.push(reply(Purpose::Synthesize, "theorem t : True := trivial"));
  s.llm_backend.push(reply(Purpose::Reflect, "theorem t : True := sorry"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto r = synthesize_graph(g, kStmt, b, ReflectionPolicy{});
  EXPECT_EQ(r.status, FinalStatus::Compiled);
  EXPECT_EQ(r.outcomes.back().attempts, 2);
  EXPECT_EQ(s.count("compiler"), 1u);
}

TEST(Graph, FailedDefinitionIsPartialFailure) {
  Fixture f;
  test::Stack s;
  s.llm_backend.push(reply(Purpose::Synthesize, "def IsNil := 0"));
  s.llm_backend.push(reply(Purpose::Synthesize, "theorem t : True := sorry"));
  s.compiler_backend.push(ScriptedCompiler::error(3, "x"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler};
  auto r = synthesize_graph(f.graph, kStmt, b, ReflectionPolicy{16, false});
  EXPECT_EQ(r.status, FinalStatus::PartialFailure);
  ASSERT_EQ(r.failure_chain.size(), 1u);
  EXPECT_EQ(r.failure_chain[0].name, "nil ideal");
  EXPECT_EQ(r.failure_chain[0].failure, "max attempts");
  EXPECT_EQ(f.graph.node(f.graph.root()).status, NodeStatus::Synthesized);
  EXPECT_EQ(r.file, "import Mathlib\n\ntheorem t : True := sorry\n");
}

TEST(Graph, SkipsNodeWithFailedDependency) {
  Fixture f;
  auto deeper = f.graph.add_node(Concept::make("weird thing"), f.nil);
  f.graph.mark_failed(deeper, "budget");
  test::Stack s;
  s.llm_backend.push(reply(Purpose::Synthesize, "theorem t : True := sorry"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  SynthesisBackends b{s.llm, s.compiler, Prompts::defaults(), "import Mathlib", &s.transcript};
  auto r = synthesize_graph(f.graph, kStmt, b, ReflectionPolicy{});
  EXPECT_EQ(f.graph.node(f.nil).status, NodeStatus::Failed);
  EXPECT_EQ(r.status, FinalStatus::PartialFailure);
  EXPECT_EQ(s.count("llm"), 1u);
  bool skipped = false;
  for (const auto& e : s.transcript.records())
    if (e.value("event", "") == "synth_skip") skipped = true;
  EXPECT_TRUE(skipped);
}
