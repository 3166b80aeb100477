#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "aria/compiler.hpp"
#include "aria/errors.hpp"
#include "aria/process.hpp"
#include "support.hpp"

using namespace aria;
using namespace std::chrono_literals;

namespace {

// Stand-in toolchain: reports a version, rejects files containing BAD, and
// hangs on files containing HANG.
std::filesystem::path fake_lean(const test::TempDir& dir) {
  auto p = dir / "fake-lean";
  std::ofstream out(p);
  out << "#!/bin/sh\n"
         "if [ \"$1\" = \"--version\" ]; then echo 'Lean (version 4.9.0, fake)'; exit 0; fi\n"
         "if grep -q HANG \"$1\"; then exec sleep 10; fi\n"
         "if grep -q BAD \"$1\"; then\n"
         "  echo \"$1:3:10: error: unknown constant 'IsNil'\"\n"
         "  echo \"$1:5:0: warning: declaration uses 'sorry'\"\n"
         "  exit 1\n"
         "fi\n"
         "echo \"$1:5:0: warning: declaration uses 'sorry'\"\n"
         "exit 0\n";
  out.close();
  std::filesystem::permissions(p, std::filesystem::perms::owner_all);
  return p;
}

}  // namespace

TEST(Diagnostics, SingleError) {
  auto d = parse_diagnostics("f.lean:3:10: error: unknown constant 'IsNil'");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], (Diagnostic{Severity::Error, 3, 10, "unknown constant 'IsNil'"}));
}

TEST(Diagnostics, ContinuationLinesFold) {
  auto d = parse_diagnostics(
      "noise before\n"
      "a.lean:2:4: error: type mismatch\n"
      "  h\n"
      "has type\n"
      "\n"
      "a.lean:7:0: warning: declaration uses 'sorry'\r\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].message, "type mismatch\nh\nhas type");
  EXPECT_EQ(d[1].severity, Severity::Warning);
  EXPECT_EQ(d[1].line, 7);
  EXPECT_TRUE(has_errors(d));
  EXPECT_FALSE(has_errors({d[1]}));
}

TEST(Diagnostics, PathsWithColonsAndInfo) {
  auto d = parse_diagnostics("C:/proj/x.lean:1:2: info: hello");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].severity, Severity::Info);
  EXPECT_EQ(d[0].message, "hello");
  EXPECT_TRUE(parse_diagnostics("").empty());
}

TEST(Classify, SuccessIffNoErrors) {
  EXPECT_TRUE(classify({0, "x.lean:1:0: warning: declaration uses 'sorry'", false, 0}).success);
  EXPECT_FALSE(classify({1, "x.lean:1:0: error: boom", false, 0}).success);
  auto t = classify({0, "", true, 0});
  EXPECT_FALSE(t.success);
  EXPECT_EQ(t.diagnostics.back().message, "timeout");
  auto crash = classify({137, "", false, 0});
  EXPECT_FALSE(crash.success);
  EXPECT_EQ(crash.diagnostics.size(), 1u);
}

TEST(Scripted, VerdictShapes) {
  auto ok = ScriptedCompiler::verdict_from_json({{"verdict", "ok"}});
  EXPECT_TRUE(classify(ok).success);
  auto err = ScriptedCompiler::verdict_from_json({{"verdict", "error"}, {"line", 3}, {"message", "unknown constant"}});
  auto c = classify(err);
  ASSERT_FALSE(c.success);
  EXPECT_EQ(c.diagnostics[0].line, 3);
  EXPECT_EQ(c.diagnostics[0].message, "unknown constant");
  auto raw = ScriptedCompiler::verdict_from_json({{"output", "f.lean:2:1: error: nope"}});
  EXPECT_EQ(raw.exit_code, 1);
  EXPECT_THROW(ScriptedCompiler::verdict_from_json({{"verdict", "maybe"}}), MalformedResponse);
}

TEST(Scripted, FixtureFileAndExhaustion) {
  auto sc = ScriptedCompiler::from_file(test::fixtures() / "koethe" / "compile_fail_first.jsonl");
  EXPECT_EQ(sc.remaining(), 2u);
  EXPECT_FALSE(classify(sc.run("a", 1s)).success);
  EXPECT_TRUE(classify(sc.run("b", 1s)).success);
  EXPECT_THROW(sc.run("c", 1s), BackendUnavailable);
  EXPECT_EQ(sc.consumed(), 2u);
}

TEST(Client, CachedBySource) {
  test::Stack s;
  s.compiler_backend.push(ScriptedCompiler::error(3, "unknown constant 'IsNil'"));
  s.compiler_backend.push(ScriptedCompiler::ok());
  EXPECT_FALSE(s.compiler.check("theorem t : True := sorry").success);
  EXPECT_FALSE(s.compiler.check("theorem t : True := sorry").success);
  EXPECT_TRUE(s.compiler.check("theorem t : True := trivial").success);
  EXPECT_EQ(s.compiler_backend.consumed(), 2u);
  auto recs = s.transcript.call_records();
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_FALSE(recs[0]["cache_hit"].get<bool>());
  EXPECT_TRUE(recs[1]["cache_hit"].get<bool>());
  EXPECT_EQ(recs[0]["kind"], "compiler");
  EXPECT_EQ(recs[0]["purpose"], "check");
}

TEST(Client, RejectsZeroTimeout) {
  test::Stack s;
  EXPECT_THROW(CompilerClient(s.compiler_backend, s.gateway, 0s), std::invalid_argument);
}

TEST(Process, SplitCommand) {
  EXPECT_EQ(split_command("lake env  lean"), (std::vector<std::string>{"lake", "env", "lean"}));
  EXPECT_EQ(split_command("a 'b c' \"d e\""), (std::vector<std::string>{"a", "b c", "d e"}));
}

TEST(Process, MissingProgram) {
  EXPECT_THROW(run_process({"/nonexistent/definitely-not-here"}, "", 1000ms), BackendUnavailable);
}

TEST(Process, StdinAndExit) {
  auto r = run_process({"sh", "-c", "cat; exit 3"}, "hello", 5000ms);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(r.output, "hello");
  EXPECT_FALSE(r.timed_out);
}

TEST(LeanProcess, FakeToolchain) {
  test::TempDir dir("aria-lean");
  auto exe = fake_lean(dir);
  LeanCompiler lean(dir.path(), exe.string());
  EXPECT_TRUE(lean.available());
  EXPECT_EQ(lean.version(), "Lean (version 4.9.0, fake)");

  auto good = classify(lean.run("theorem t : True := sorry\n", 10s));
  EXPECT_TRUE(good.success);
  ASSERT_EQ(good.diagnostics.size(), 1u);
  EXPECT_EQ(good.diagnostics[0].severity, Severity::Warning);

  auto bad = classify(lean.run("-- BAD\n", 10s));
  ASSERT_FALSE(bad.success);
  EXPECT_EQ(bad.diagnostics[0], (Diagnostic{Severity::Error, 3, 10, "unknown constant 'IsNil'"}));

  // Temporary check files are cleaned up.
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    EXPECT_EQ(e.path().filename().string().rfind("AriaCheck_", 0), std::string::npos);
}

TEST(LeanProcess, Timeout) {
  test::TempDir dir("aria-lean");
  auto exe = fake_lean(dir);
  LeanCompiler lean(dir.path(), exe.string());
  auto start = std::chrono::steady_clock::now();
  auto run = lean.run("-- HANG\n", 1s);
  EXPECT_TRUE(run.timed_out);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 8s);
  EXPECT_FALSE(classify(run).success);
}

TEST(LeanProcess, Unavailable) {
  LeanCompiler missing("/nonexistent/project", "no-such-lean-binary");
  EXPECT_FALSE(missing.available());
  EXPECT_EQ(missing.version(), "unavailable");
  EXPECT_THROW(missing.run("x", 1s), BackendUnavailable);
}

TEST(LeanLive, PlaceholderTheoremCompiles) {
  const char* project = std::getenv("ARIA_LEAN_PROJECT");
  const char* command = std::getenv("ARIA_LEAN_COMMAND");
  LeanCompiler lean(project ? project : ".", command ? command : "lake env lean");
  if (!project || !lean.available()) GTEST_SKIP() << "no Lean toolchain; set ARIA_LEAN_PROJECT to run";
  test::Stack s;
  CompilerClient client(lean, s.gateway);
  auto r = client.check(test::slurp(test::fixtures() / "live" / "placeholder.lean"));
  EXPECT_TRUE(r.success) << r.raw_output;
}
