#include "aria/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

ConfusionMatrix confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size())
    throw LengthMismatch("predicted has " + std::to_string(predicted.size()) + " entries, truth has " +
                         std::to_string(truth.size()));
  if (predicted.empty()) throw std::invalid_argument("confusion needs at least one decision");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && truth[i])
      ++cm.tp;
    else if (!predicted[i] && !truth[i])
      ++cm.tn;
    else if (predicted[i])
      ++cm.fp;
    else
      ++cm.fn;
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyMatrix("confusion matrix is empty");
  auto ratio = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
  Metrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

double pass_at_k(const std::vector<std::vector<bool>>& outcomes, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (outcomes.empty()) return 0.0;
  std::size_t solved = 0;
  for (std::size_t p = 0; p < outcomes.size(); ++p) {
    const auto& row = outcomes[p];
    if (row.size() < k)
      throw InsufficientAttempts("problem " + std::to_string(p) + " has " + std::to_string(row.size()) +
                                 " attempts, need " + std::to_string(k));
    if (std::any_of(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), [](bool b) { return b; })) ++solved;
  }
  return static_cast<double>(solved) / static_cast<double>(outcomes.size());
}

double percent(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

namespace {

std::vector<json> read_jsonl(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(std::string("cannot read ") + what + " " + path.string());
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  for (const auto& j : read_jsonl(path, "dataset")) {
    DatasetRecord r;
    try {
      r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      r.informal_text = j.at("informal_text").get<std::string>();
      if (j.contains("ground_truth_label") && !j["ground_truth_label"].is_null())
        r.ground_truth_label = j["ground_truth_label"].get<bool>();
      if (j.contains("reference_formal") && !j["reference_formal"].is_null())
        r.reference_formal = j["reference_formal"].get<std::string>();
    } catch (const json::exception& e) {
      throw Error(path.string() + ": bad dataset record: " + e.what());
    }
    if (trim(r.informal_text).empty()) throw Error(path.string() + ": record '" + r.id + "' has empty text");
    if (!ids.insert(r.id).second) throw Error(path.string() + ": duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, bool> load_labels(const std::filesystem::path& path) {
  std::map<std::string, bool> out;
  for (const auto& j : read_jsonl(path, "labels")) {
    try {
      std::string id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      out[id] = j.at("label").get<bool>();
    } catch (const json::exception& e) {
      throw Error(path.string() + ": bad label record: " + e.what());
    }
  }
  return out;
}

ProblemOutcome summarize(const FormalizeResult& result, const std::vector<json>& records) {
  ProblemOutcome o;
  o.id = result.id;
  o.compiled = result.compiled();
  o.accepted = result.compiled() && result.score && result.score->accepted;
  if (result.score) o.score = result.score->score;
  o.error = result.error;
  for (const auto& r : records) {
    if (!r.contains("kind") || r.value("problem", "") != result.id) continue;
    auto kind = r.value("kind", "");
    if (kind == "llm")
      ++o.llm_calls;
    else if (kind == "retrieval")
      ++o.retrieval_calls;
    else if (kind == "compiler")
      ++o.compile_calls;
  }
  return o;
}

BenchmarkReport run_benchmark(const std::vector<DatasetRecord>& dataset, PipelineBackends& backends,
                              const BenchmarkOptions& options, const std::map<std::string, bool>& labels) {
  BenchmarkReport report;
  report.problems.resize(dataset.size());
  PipelineOptions pipeline = options.pipeline;
  pipeline.score = true;
  std::vector<std::optional<FormalizeResult>> results(dataset.size());

  auto run_one = [&](std::size_t i) {
    const auto& rec = dataset[i];
    auto start = std::chrono::steady_clock::now();
    InformalStatement st{rec.id, rec.informal_text, std::nullopt};
    try {
      results[i] = formalize(st, backends, pipeline);
    } catch (const CacheMiss&) {
      throw;
    } catch (const std::exception& e) {
      FormalizeResult failed;
      failed.id = rec.id;
      failed.error = e.what();
      results[i] = std::move(failed);
      spdlog::warn("problem '{}' failed: {}", rec.id, e.what());
    }
    report.problems[i].wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  int workers = std::clamp(options.workers, 1, 64);
  if (workers == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < dataset.size();) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  auto records = backends.gateway.transcript().call_records();
  std::size_t compiled = 0, accepted = 0, llm = 0;
  std::vector<bool> predicted, truth;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    double wall = report.problems[i].wall_time_s;
    auto& o = report.problems[i] = summarize(*results[i], records);
    o.wall_time_s = wall;
    if (auto it = labels.find(o.id); it != labels.end())
      o.truth = it->second;
    else
      o.truth = dataset[i].ground_truth_label;
    compiled += o.compiled;
    accepted += o.accepted;
    llm += o.llm_calls;
    if (o.truth) {
      predicted.push_back(o.accepted);
      truth.push_back(*o.truth);
    }
  }
  if (!dataset.empty()) {
    double n = static_cast<double>(dataset.size());
    report.compilation_rate = compiled / n;
    report.final_accuracy = accepted / n;
    report.mean_llm_calls = llm / n;
  }
  if (!predicted.empty()) {
    report.confusion = confusion(predicted, truth);
    report.metrics = metrics(*report.confusion);
  }
  return report;
}

json to_json(const BenchmarkReport& r) {
  json problems = json::array();
  for (const auto& p : r.problems) {
    json j = {{"id", p.id},
              {"compiled", p.compiled},
              {"accepted", p.accepted},
              {"llm_calls", p.llm_calls},
              {"retrieval_calls", p.retrieval_calls},
              {"compile_calls", p.compile_calls},
              {"wall_time_s", p.wall_time_s}};
    if (p.truth) j["truth"] = *p.truth;
    if (p.score) j["score"] = *p.score;
    if (p.error) j["error"] = *p.error;
    problems.push_back(std::move(j));
  }
  json j = {{"problems", problems},
            {"compilation_rate", percent(r.compilation_rate)},
            {"final_accuracy", percent(r.final_accuracy)},
            {"mean_llm_calls", r.mean_llm_calls}};
  if (r.confusion)
    j["confusion"] = {{"tp", r.confusion->tp}, {"tn", r.confusion->tn}, {"fp", r.confusion->fp}, {"fn", r.confusion->fn}};
  if (r.metrics)
    j["metrics"] = {{"accuracy", percent(r.metrics->accuracy)},
                    {"precision", percent(r.metrics->precision)},
                    {"recall", percent(r.metrics->recall)},
                    {"f1", percent(r.metrics->f1)}};
  return j;
}

std::string format_table(const BenchmarkReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << std::left << std::setw(24) << "problem" << std::setw(10) << "compiled" << std::setw(10) << "accepted"
      << std::setw(8) << "score" << std::setw(6) << "llm" << std::setw(10) << "retrieval" << std::setw(9)
      << "compile" << "\n";
  for (const auto& p : r.problems) {
    std::ostringstream score;
    if (p.score)
      score << std::fixed << std::setprecision(3) << *p.score;
    else
      score << "-";
    out << std::setw(24) << p.id << std::setw(10) << (p.compiled ? "yes" : "no") << std::setw(10)
        << (p.accepted ? "yes" : "no") << std::setw(8) << score.str() << std::setw(6) << p.llm_calls
        << std::setw(10) << p.retrieval_calls << std::setw(9) << p.compile_calls << "\n";
  }
  out << "\ncompilation rate  " << percent(r.compilation_rate) << "%\n";
  out << "final accuracy    " << percent(r.final_accuracy) << "%\n";
  out << std::setprecision(2) << "mean LLM calls    " << r.mean_llm_calls << "\n" << std::setprecision(1);
  if (r.confusion && r.metrics) {
    out << "\nTP " << r.confusion->tp << "  TN " << r.confusion->tn << "  FP " << r.confusion->fp << "  FN "
        << r.confusion->fn << "\n";
    out << "accuracy " << percent(r.metrics->accuracy) << "%  precision " << percent(r.metrics->precision)
        << "%  recall " << percent(r.metrics->recall) << "%  F1 " << percent(r.metrics->f1) << "%\n";
  }
  return out.str();
}

}  // namespace aria
