// One PASS/FAIL/SKIP line per acceptance criterion. Exit status is nonzero
// when any line fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <queue>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "aria/core/graph.hpp"
#include "aria/errors.hpp"
#include "aria/eval.hpp"
#include "aria/process.hpp"
#include "aria/scorer.hpp"
#include "aria/session.hpp"
#include "aria/synth.hpp"
#include "support.hpp"

using namespace aria;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  enum { Pass, Fail, Skip } status = Pass;
  std::string detail;
};

struct Check {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

#define REQUIRE(cond, msg) \
  do {                     \
    if (!(cond)) return Outcome{Outcome::Fail, msg}; \
  } while (0)

constexpr double kMetricTol = 1e-9;  // percent values compared after one-decimal rounding
constexpr double kScoreTol = 1e-12;

ProcessResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), ARIA_BIN);
  return run_process(args, "", std::chrono::seconds(60));
}

std::filesystem::path fx(const std::string& rel) { return test::fixtures() / rel; }

// Metrics oracle over the published counts.
Outcome metric_oracle() {
  struct Row {
    ConfusionMatrix cm;
    double a, p, r, f;
  };
  for (const Row& row : {Row{{50, 12, 5, 2}, 89.9, 90.9, 96.2, 93.5}, Row{{42, 15, 2, 10}, 82.6, 95.5, 80.8, 87.5}}) {
    auto m = metrics(row.cm);
    double got[] = {percent(m.accuracy), percent(m.precision), percent(m.recall), percent(m.f1)};
    double want[] = {row.a, row.p, row.r, row.f};
    for (int i = 0; i < 4; ++i)
      REQUIRE(std::abs(got[i] - want[i]) < kMetricTol,
              "metric " + std::to_string(i) + " = " + std::to_string(got[i]) + ", expected " + std::to_string(want[i]));
  }
  return {};
}

Outcome aggregation_laws() {
  std::mt19937 rng(2024);
  const MatchLabel all[] = {MatchLabel::PerfectMatch, MatchLabel::MinorInconsistency, MatchLabel::MajorInconsistency};
  int cases = 0;
  for (; cases < 1500; ++cases) {
    std::vector<MatchLabel> ls(std::uniform_int_distribution<int>(1, 10)(rng));
    for (auto& l : ls) l = all[std::uniform_int_distribution<int>(0, 2)(rng)];
    double lambda = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    double s = aggregate(ls, lambda);
    bool major = std::count(ls.begin(), ls.end(), MatchLabel::MajorInconsistency) > 0;
    bool perfect = std::all_of(ls.begin(), ls.end(), [](auto l) { return l == MatchLabel::PerfectMatch; });
    REQUIRE(!major || s == 0.0, "zero law");
    REQUIRE(!perfect || s == 1.0, "unit law");
    auto shuffled = ls;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    REQUIRE(std::abs(aggregate(shuffled, lambda) - s) < kScoreTol, "order invariance");
    auto more = ls;
    more.push_back(MatchLabel::MinorInconsistency);
    REQUIRE(major || aggregate(more, lambda) < s, "strict decay");
    double a1 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double a2 = std::uniform_real_distribution<double>(a1, 1.0)(rng);
    REQUIRE(!decide(s, a2) || decide(s, a1), "decide monotone in alpha");
  }
  return {Outcome::Pass, std::to_string(cases) + " cases"};
}

Outcome appendix_replays() {
  auto index = TermIndex::load(fx("term_index.jsonl"));
  struct Case {
    std::string script, stem;
    bool no_terms;
    double score;
    bool accept0, accept09;
  };
  const Case cases[] = {{"b1", "b1", false, 1.0, true, true},
                        {"b2", "b2", false, 0.0, false, false},
                        {"b3", "b3", false, 0.0, false, false},
                        {"b3_no_grounding", "b3", true, 0.64, true, false}};
  for (const auto& c : cases) {
    for (double alpha : {0.0, 0.9}) {
      ResponseCache cache;
      Transcript transcript;
      Gateway gateway(cache, transcript, CacheMode::ReadWrite, RetryPolicy{0, std::chrono::milliseconds(0)});
      auto backend = ScriptedLlm::from_file(fx("scorer/" + c.script + ".jsonl"));
      LlmClient llm(backend, gateway);
      ScorerBackends b{llm, &index, &gateway};
      b.no_term_grounding = c.no_terms;
      InformalStatement st{c.stem, trim(test::slurp(fx("scorer/" + c.stem + ".txt"))), std::nullopt};
      auto r = score_statement(st, test::slurp(fx("scorer/" + c.stem + ".lean")), b, alpha);
      REQUIRE(std::abs(r.score - c.score) < kScoreTol, c.script + " score " + std::to_string(r.score));
      REQUIRE(r.accepted == (alpha == 0.0 ? c.accept0 : c.accept09), c.script + " decision at " + std::to_string(alpha));
    }
  }
  return {Outcome::Pass, "1.0 / 0.0 / 0.0 / 0.64"};
}

struct SynthRun {
  NodeOutcome outcome;
  std::size_t compile_calls;
};

SynthRun synth_with_failures(int failures, int scripted, ReflectionPolicy policy) {
  DependencyGraph g(Concept::make("statement s", "t"));
  auto nil = g.add_node(Concept::make("nil ideal"));
  g.mark_needs_synthesis(nil);
  test::Stack s;
  for (int i = 0; i < scripted; ++i) {
    s.llm_backend.push({i == 0 ? Purpose::Synthesize : Purpose::Reflect, std::nullopt,
                        test::lean_reply("def IsNil := " + std::to_string(i)), false, false});
    s.compiler_backend.push(i < failures ? ScriptedCompiler::error(1, "x") : ScriptedCompiler::ok());
  }
  SynthesisBackends b{s.llm, s.compiler};
  auto o = synthesize_node(nil, g, assemble_context(nil, g), b, policy);
  return {o, s.count("compiler")};
}

Outcome reflection_bound() {
  for (int k = 0; k <= 15; ++k) {
    auto r = synth_with_failures(k, k + 1, ReflectionPolicy{});
    REQUIRE(r.outcome.status == NodeStatus::Synthesized && r.compile_calls == static_cast<std::size_t>(k + 1),
            "k=" + std::to_string(k));
  }
  auto ex = synth_with_failures(16, 16, ReflectionPolicy{});
  REQUIRE(ex.outcome.status == NodeStatus::Failed && ex.outcome.failure == "max attempts" && ex.outcome.attempts == 16 &&
              ex.compile_calls == 16,
          "16 failures");

  test::TempDir dir("aria-accept");
  auto r = cli({"formalize", fx("koethe/koethe.txt").string(), "--config", fx("koethe/koethe.conf").string(), "--out",
                dir.path().string(), "--set", "cache_dir=" + (dir / "cache").string(), "--set",
                "compiler_script=" + fx("koethe/compile_fail_first.jsonl").string(), "--no-reflect"});
  auto result = json::parse(test::slurp(dir / "koethe.json"));
  std::size_t compiles = 0;
  for (const auto& x : Transcript::load(dir / "transcript.jsonl")) compiles += x.value("kind", "") == "compiler";
  for (const auto& o : result["final"]["outcomes"]) REQUIRE(o["attempts"].get<int>() <= 1, "--no-reflect attempts");
  REQUIRE(compiles == 2, "--no-reflect compile calls " + std::to_string(compiles));
  return {};
}

Outcome koethe_end_to_end() {
  test::TempDir dir("aria-accept");
  auto r = cli({"formalize", fx("koethe/koethe.txt").string(), "--config", fx("koethe/koethe.conf").string(), "--out",
                dir.path().string(), "--set", "cache_dir=" + (dir / "cache").string(), "--score"});
  REQUIRE(r.exit_code == 0, "formalize exit " + std::to_string(r.exit_code));
  auto lean = test::slurp(dir / "koethe.lean");
  auto def = lean.find("def IsNil");
  auto thm = lean.find("theorem ");
  REQUIRE(def != std::string::npos && thm != std::string::npos && def < thm, "definition before theorem");

  // Dependencies end synthesis before their dependents begin.
  auto records = Transcript::load(dir / "transcript.jsonl");
  std::map<std::string, std::size_t> end_at, begin_at;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto ev = records[i].value("event", "");
    if (ev == "synth_begin") begin_at[records[i]["node"]] = i;
    if (ev == "synth_end") end_at[records[i]["node"]] = i;
  }
  auto graph = DependencyGraph::from_json(json::parse(test::slurp(dir / "koethe.json"))["graph"]);
  for (auto [dep, dependent] : graph.edges())
    if (end_at.count(dep.str()) && begin_at.count(dependent.str()))
      REQUIRE(end_at[dep.str()] < begin_at[dependent.str()], "event order");
  REQUIRE(begin_at.size() >= 2, "expected a definition and the theorem");

  auto rr = cli({"replay", (dir / "transcript.jsonl").string()});
  REQUIRE(rr.exit_code == 0, "replay exit " + std::to_string(rr.exit_code));
  REQUIRE(test::slurp(dir / "replay" / "koethe.lean") == lean, "replay differs");
  for (const auto& x : Transcript::load(dir / "replay" / "transcript.jsonl"))
    REQUIRE(!x.contains("kind") || x.value("cache_hit", false), "backend miss during replay");
  return {};
}

Outcome ablations() {
  const std::pair<std::string, std::string> runs[] = {{"--no-rag", "corpus/llm_norag.jsonl"},
                                                      {"--no-got", "corpus/llm_nogot.jsonl"}};
  for (const auto& [flag, script] : runs) {
    test::TempDir dir("aria-accept");
    cli({"eval", "--dataset", fx("corpus/dataset.jsonl").string(), "--labels", fx("corpus/labels.jsonl").string(),
         "--config", fx("corpus/corpus.conf").string(), "--out", dir.path().string(), "--set",
         "cache_dir=" + (dir / "cache").string(), "--set", "llm_script=" + fx(script).string(), flag});
    auto records = Transcript::load(dir / "transcript.jsonl");
    int plans = 0;
    for (const auto& x : records) {
      if (flag == "--no-rag") REQUIRE(x.value("kind", "") != "retrieval", "retrieval record under --no-rag");
      if (flag == "--no-got" && x.value("event", "") == "plan_end") {
        ++plans;
        for (const auto& n : x["graph"]["nodes"]) REQUIRE(n["depth"].get<int>() <= 1, "depth > 1 under --no-got");
      }
    }
    if (flag == "--no-got") REQUIRE(plans == 3, "expected 3 plans, got " + std::to_string(plans));
  }
  return {};
}

Outcome graph_properties() {
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  std::mt19937 rng(99);
  int trials = 0;
  for (; trials < 600; ++trials) {
    DependencyGraph g(Concept::make("root"));
    int steps = std::uniform_int_distribution<int>(1, 25)(rng);
    for (int s = 0; s < steps; ++s) {
      auto ids = g.ids();
      auto parent = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
      try {
        g.add_node(Concept::make(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]), parent);
      } catch (const CycleError&) {
      }
    }
    auto order = g.topological_order();
    REQUIRE(order.size() == g.size(), "order covers every node (acyclic)");
    std::map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (auto [u, v] : g.edges()) REQUIRE(pos[u] < pos[v], "edge order");
    // Depth law by BFS from the root.
    std::map<NodeId, int> depth{{g.root(), 0}};
    std::queue<NodeId> q;
    q.push(g.root());
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : g.dependencies(u))
        if (!depth.count(v)) depth[v] = depth[u] + 1, q.push(v);
    }
    for (auto id : g.ids()) REQUIRE(g.node(id).depth == depth.at(id), "depth law");
  }
  return {Outcome::Pass, std::to_string(trials) + " cases"};
}

Outcome call_accounting() {
  std::map<std::string, std::size_t> hand;
  std::size_t total = 0;
  for (const auto& e : test::read_jsonl(fx("corpus/llm.jsonl"))) {
    ++hand[e.at("problem").get<std::string>()];
    ++total;
  }
  test::TempDir dir("aria-accept");
  auto cfg = load_config(fx("corpus/corpus.conf"));
  cfg.cache_dir = (dir / "cache").string();
  Session session(cfg, CacheMode::ReadWrite, dir / "transcript.jsonl");
  auto backends = session.pipeline_backends();
  auto report = run_benchmark(load_dataset(fx("corpus/dataset.jsonl")), backends,
                              BenchmarkOptions{session.pipeline_options(), 1}, load_labels(fx("corpus/labels.jsonl")));
  double expected = static_cast<double>(total) / static_cast<double>(hand.size());
  REQUIRE(report.mean_llm_calls == expected,
          "mean " + std::to_string(report.mean_llm_calls) + " vs hand count " + std::to_string(expected));
  for (const auto& p : report.problems) REQUIRE(p.llm_calls == hand[p.id], p.id);
  return {Outcome::Pass, std::to_string(total) + " calls / " + std::to_string(hand.size()) + " problems"};
}

Outcome live_lean() {
  const char* project = std::getenv("ARIA_LEAN_PROJECT");
  const char* command = std::getenv("ARIA_LEAN_COMMAND");
  LeanCompiler lean(project ? project : ".", command ? command : "lake env lean");
  if (!project || !lean.available()) return {Outcome::Skip, "no Lean toolchain (set ARIA_LEAN_PROJECT)"};
  test::Stack s;
  CompilerClient client(lean, s.gateway);
  auto r = client.check(test::slurp(fx("live/placeholder.lean")));
  REQUIRE(r.success, r.raw_output);
  return {};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Check> checks = {
      {"metric oracle on published confusion counts", 1, metric_oracle},
      {"aggregation laws", 5, aggregation_laws},
      {"scorer replays of the worked examples", 5, appendix_replays},
      {"reflection bound", 5, reflection_bound},
      {"end-to-end scripted Koethe fixture and replay", 10, koethe_end_to_end},
      {"ablation separations", 10, ablations},
      {"graph properties", 5, graph_properties},
      {"call accounting", 5, call_accounting},
      {"live toolchain check (optional)", 120, live_lean},
  };
  int failed = 0;
  for (const auto& c : checks) {
    auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (o.status == Outcome::Pass && secs >= c.budget_s) o = {Outcome::Fail, "over time budget"};
    const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
    if (o.status == Outcome::Fail) ++failed;
    std::printf("%s  %-48s %7.3fs  %s\n", tag, c.name.c_str(), secs, o.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
