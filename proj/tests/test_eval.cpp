#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aria/errors.hpp"
#include "aria/eval.hpp"
#include "aria/session.hpp"
#include "support.hpp"

using namespace aria;

namespace {

// Published scorer comparison columns: (TP, TN, FP, FN) and the reported
// accuracy / precision / recall / F1 percentages.
struct Column {
  ConfusionMatrix cm;
  double acc, prec, rec, f1;
};

BenchmarkReport run_corpus(const std::filesystem::path& dir, const std::string& script = "llm.jsonl") {
  auto base = test::fixtures() / "corpus";
  auto cfg = load_config(base / "corpus.conf");
  cfg.llm_script = (base / script).string();
  cfg.cache_dir = (dir / "cache").string();
  cfg.out_dir = dir.string();
  Session session(cfg, CacheMode::ReadWrite, dir / "transcript.jsonl");
  auto backends = session.pipeline_backends();
  BenchmarkOptions opts{session.pipeline_options(), 1};
  return run_benchmark(load_dataset(base / "dataset.jsonl"), backends, opts, load_labels(base / "labels.jsonl"));
}

nlohmann::json without_timing(nlohmann::json j) {
  for (auto& p : j["problems"]) p.erase("wall_time_s");
  return j;
}

}  // namespace

TEST(Metrics, PublishedScorerColumns) {
  const std::vector<Column> cols = {
      {{50, 12, 5, 2}, 89.9, 90.9, 96.2, 93.5},
      {{42, 15, 2, 10}, 82.6, 95.5, 80.8, 87.5},
      {{44, 7, 10, 8}, 73.9, 81.5, 84.6, 83.0},
      {{7, 16, 1, 45}, 33.3, 87.5, 13.5, 23.3},
      {{45, 8, 9, 7}, 76.8, 83.3, 86.5, 84.9},
  };
  for (const auto& c : cols) {
    auto m = metrics(c.cm);
    EXPECT_DOUBLE_EQ(percent(m.accuracy), c.acc);
    EXPECT_DOUBLE_EQ(percent(m.precision), c.prec);
    EXPECT_DOUBLE_EQ(percent(m.recall), c.rec);
    EXPECT_DOUBLE_EQ(percent(m.f1), c.f1);
  }
}

TEST(Metrics, ColumnWithPrintedPrecisionTypo) {
  // (46, 3, 14, 6): accuracy, recall and F1 match the printed 71.0 / 88.5 /
  // 82.1; precision is 46/60 = 76.7, printed as 77.6.
  auto m = metrics({46, 3, 14, 6});
  EXPECT_DOUBLE_EQ(percent(m.accuracy), 71.0);
  EXPECT_DOUBLE_EQ(percent(m.recall), 88.5);
  EXPECT_DOUBLE_EQ(percent(m.f1), 82.1);
  EXPECT_DOUBLE_EQ(percent(m.precision), 76.7);
}

TEST(Metrics, RandomMatricesAgainstDefinitions) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> d(0, 40);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix cm{static_cast<std::size_t>(d(rng)), static_cast<std::size_t>(d(rng)),
                       static_cast<std::size_t>(d(rng)), static_cast<std::size_t>(d(rng))};
    if (cm.total() == 0) continue;
    auto m = metrics(cm);
    double tp = cm.tp, tn = cm.tn, fp = cm.fp, fn = cm.fn;
    ASSERT_NEAR(m.accuracy, (tp + tn) / (tp + tn + fp + fn), 1e-12);
    double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    ASSERT_NEAR(m.precision, p, 1e-12);
    ASSERT_NEAR(m.recall, r, 1e-12);
    ASSERT_NEAR(m.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-12);
    for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, DegenerateMatrices) {
  auto m = metrics({0, 7, 0, 0});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_THROW(metrics({}), EmptyMatrix);
}

TEST(Confusion, Counts) {
  auto cm = confusion({true, true, false, false, true}, {true, false, false, true, true});
  EXPECT_EQ(cm, (ConfusionMatrix{2, 1, 1, 1}));
  EXPECT_THROW(confusion({true}, {true, false}), LengthMismatch);
  EXPECT_THROW(confusion({}, {}), std::invalid_argument);
}

TEST(PassAtK, Basics) {
  std::vector<std::vector<bool>> o = {{false, true, false}, {false, false, false}, {true, false, false}};
  EXPECT_NEAR(pass_at_k(o, 1), 1.0 / 3, 1e-12);
  EXPECT_NEAR(pass_at_k(o, 2), 2.0 / 3, 1e-12);
  EXPECT_NEAR(pass_at_k(o, 3), 2.0 / 3, 1e-12);
  EXPECT_THROW(pass_at_k(o, 4), InsufficientAttempts);
  for (std::size_t k = 1; k < 3; ++k) EXPECT_LE(pass_at_k(o, k), pass_at_k(o, k + 1));
}

TEST(Percent, Rounding) {
  EXPECT_DOUBLE_EQ(percent(0.8993), 89.9);
  EXPECT_DOUBLE_EQ(percent(2.0 / 3), 66.7);
  EXPECT_DOUBLE_EQ(percent(0.0), 0.0);
  EXPECT_DOUBLE_EQ(percent(1.0), 100.0);
}

TEST(Dataset, Load) {
  auto ds = load_dataset(test::fixtures() / "corpus" / "dataset.jsonl");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[0].id, "koethe");
  auto labels = load_labels(test::fixtures() / "corpus" / "labels.jsonl");
  EXPECT_EQ(labels.at("quaternion"), false);
  EXPECT_EQ(labels.size(), 3u);
}

TEST(Benchmark, ScriptedCorpus) {
  test::TempDir dir("aria-eval");
  auto report = run_corpus(dir.path());
  ASSERT_EQ(report.problems.size(), 3u);
  EXPECT_NEAR(report.compilation_rate, 2.0 / 3, 1e-12);
  EXPECT_NEAR(report.final_accuracy, 1.0 / 3, 1e-12);
  // Hand count of the script: 11 + 6 + 4 language-model calls.
  auto per_problem = test::read_jsonl(test::fixtures() / "corpus" / "llm.jsonl");
  std::map<std::string, std::size_t> scripted;
  for (const auto& e : per_problem) ++scripted[e.at("problem").get<std::string>()];
  for (const auto& p : report.problems) {
    EXPECT_EQ(p.llm_calls, scripted[p.id]) << p.id;
    EXPECT_FALSE(p.error) << p.id;
  }
  EXPECT_NEAR(report.mean_llm_calls, 21.0 / 3, 1e-12);
  ASSERT_TRUE(report.confusion);
  EXPECT_EQ(*report.confusion, (ConfusionMatrix{1, 1, 0, 1}));
  auto table = format_table(report);
  EXPECT_NE(table.find("66.7"), std::string::npos);
  EXPECT_NE(table.find("33.3"), std::string::npos);
}

TEST(Benchmark, Deterministic) {
  test::TempDir a("aria-eval"), b("aria-eval");
  auto ra = run_corpus(a.path());
  auto rb = run_corpus(b.path());
  EXPECT_EQ(without_timing(to_json(ra)), without_timing(to_json(rb)));
}
