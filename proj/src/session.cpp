#include "aria/session.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;
namespace fs = std::filesystem;

Session::Session(RunConfig config, CacheMode mode, const fs::path& transcript_path) : config_(std::move(config)) {
  validate(config_);
  const bool replay = mode == CacheMode::ReplayOnly;
  if (!config_.prompts_dir.empty()) prompts_.load_overrides(config_.prompts_dir);

  cache_ = config_.cache_dir.empty() ? std::make_unique<ResponseCache>()
                                     : std::make_unique<ResponseCache>(fs::path(config_.cache_dir));
  transcript_ = transcript_path.empty() ? std::make_unique<Transcript>() : std::make_unique<Transcript>(transcript_path);
  gateway_ = std::make_unique<Gateway>(*cache_, *transcript_, mode,
                                       RetryPolicy{config_.retries, std::chrono::milliseconds(config_.backoff_ms)});

  if (!config_.term_index.empty()) {
    try {
      index_ = TermIndex::load(config_.term_index);
    } catch (const IndexUnavailable& e) {
      throw ConfigError("term_index", e.what());
    }
  }

  if (config_.llm_backend == "scripted") {
    std::unique_ptr<ScriptedLlm> s;
    if (!config_.llm_script.empty() && fs::exists(config_.llm_script))
      s = std::make_unique<ScriptedLlm>(ScriptedLlm::from_file(config_.llm_script));
    else if (replay)
      s = std::make_unique<ScriptedLlm>();
    else
      throw ConfigError("llm_script", "scripted backend needs an existing script file");
    scripted_llm_ = s.get();
    llm_backend_ = std::move(s);
  } else {
    if (config_.llm_url.empty()) throw ConfigError("llm_url", "required for the http backend");
    HttpEndpoint ep{config_.llm_url, config_.llm_path, "Authorization", "", config_.timeout};
    if (const char* key = std::getenv(config_.llm_api_key_env.c_str()); key && *key)
      ep.auth_value = std::string("Bearer ") + key;
    llm_backend_ = std::make_unique<HttpLlm>(ep, config_.llm_model);
  }
  llm_client_ = std::make_unique<LlmClient>(*llm_backend_, *gateway_, config_.llm_model, config_.temperature);

  if (!config_.no_rag) {
    if (config_.retrieval_backend == "http") {
      if (config_.retrieval_url.empty()) throw ConfigError("retrieval_url", "required for the http backend");
      retrieval_backend_ =
          std::make_unique<HttpRetrieval>(HttpEndpoint{config_.retrieval_url, config_.retrieval_path, "Authorization",
                                                       "", config_.timeout});
    } else {
      if (!index_) index_.emplace();
      retrieval_backend_ = std::make_unique<LocalIndexRetrieval>(*index_);
    }
    retrieval_client_ = std::make_unique<RetrievalClient>(*retrieval_backend_, *gateway_);
  }

  if (config_.compiler_backend == "scripted") {
    std::unique_ptr<ScriptedCompiler> s;
    if (!config_.compiler_script.empty() && fs::exists(config_.compiler_script))
      s = std::make_unique<ScriptedCompiler>(ScriptedCompiler::from_file(config_.compiler_script));
    else if (replay)
      s = std::make_unique<ScriptedCompiler>();
    else
      throw ConfigError("compiler_script", "scripted compiler needs an existing script file");
    scripted_compiler_ = s.get();
    compiler_backend_ = std::move(s);
  } else {
    compiler_backend_ = std::make_unique<LeanCompiler>(config_.lean_project, config_.lean_command);
  }
  compiler_client_ = std::make_unique<CompilerClient>(*compiler_backend_, *gateway_,
                                                      std::chrono::seconds(config_.timeout), config_.compiler_pool);
}

Session::~Session() = default;

PipelineBackends Session::pipeline_backends() {
  return PipelineBackends{*llm_client_,
                          *compiler_client_,
                          *gateway_,
                          retrieval_client_.get(),
                          index(),
                          AnalyzerConfig{config_.analyzer_cmd, std::chrono::seconds(config_.timeout)},
                          prompts_,
                          config_.header};
}

PipelineOptions Session::pipeline_options() const {
  PipelineOptions o;
  o.grounding = {config_.k, config_.no_rag};
  o.budget = {config_.max_depth, config_.max_nodes};
  o.reflection = {config_.max_attempts, !config_.no_reflect};
  o.no_got = config_.no_got;
  o.no_term_grounding = config_.no_term_grounding;
  o.alpha = config_.alpha;
  o.lambda = config_.lambda;
  return o;
}

ScorerBackends Session::scorer_backends() {
  return ScorerBackends{*llm_client_,
                        index(),
                        gateway_.get(),
                        {config_.analyzer_cmd, std::chrono::seconds(config_.timeout)},
                        prompts_,
                        config_.lambda,
                        config_.no_term_grounding};
}

void Session::write_header(std::string_view command, const json& inputs) {
  std::string toolchain = compiler_backend_->version();
  transcript_->append({{"event", "run_header"},
                       {"command", command},
                       {"inputs", inputs},
                       {"config", to_json(config_)},
                       {"config_digest", config_digest(config_)},
                       {"toolchain", toolchain},
                       {"index_digest", index_ ? index_->digest() : std::string()}});
}

// --- commands ---------------------------------------------------------------

namespace {

std::string read_file(const fs::path& path, const char* field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Turns an id into something safe to use as a file name.
std::string file_stem(std::string_view id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  return out.empty() ? "statement" : out;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const CacheMiss& e) {
    std::cerr << "aria: cache miss: " << e.digest() << "\n";
    return kExitCacheMiss;
  } catch (const ConfigError& e) {
    std::cerr << "aria: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "aria: invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "aria: " << e.what() << "\n";
    return kExitRejected;
  }
}

int run_formalize(const InformalStatement& st, bool score, bool dump_graph, const RunConfig& config, CacheMode mode) {
  fs::path out(config.out_dir);
  Session session(config, mode, out / "transcript.jsonl");
  session.write_header("formalize", {{"statement", {{"id", st.id}, {"text", st.text}}},
                                     {"score", score},
                                     {"dump_graph", dump_graph}});
  auto backends = session.pipeline_backends();
  auto options = session.pipeline_options();
  options.score = score;
  auto result = formalize(st, backends, options);

  std::string stem = file_stem(st.id);
  if (result.final) write_file(out / (stem + ".lean"), result.final->file);
  write_file(out / (stem + ".json"), to_json(result).dump(2) + "\n");
  if (dump_graph && result.graph) {
    write_file(out / (stem + ".graph.json"), result.graph->to_json().dump(2) + "\n");
    std::cout << result.graph->to_json().dump(2) << "\n";
  }
  std::cerr << "aria: " << st.id << ": "
            << (result.final ? std::string(to_string(result.final->status)) : std::string("planning failed"));
  if (result.score) std::cerr << ", score " << result.score->score << (result.score->accepted ? " accepted" : " rejected");
  if (result.error) std::cerr << " (" << *result.error << ")";
  std::cerr << "\n";
  return result.success() ? kExitOk : kExitRejected;
}

int run_score(const InformalStatement& informal, const std::string& formal, const RunConfig& config, CacheMode mode) {
  fs::path out(config.out_dir);
  Session session(config, mode, out / "transcript.jsonl");
  session.write_header("score", {{"statement", {{"id", informal.id}, {"text", informal.text}}}, {"formal", formal}});
  auto backends = session.scorer_backends();
  session.transcript().set_problem(informal.id);
  session.transcript().event("problem_begin", {{"problem", informal.id}});
  auto report = score_statement(informal, formal, backends, config.alpha);
  session.transcript().event("problem_end", {{"score", report.score}, {"accepted", report.accepted}});
  auto text = to_json(report).dump(2) + "\n";
  write_file(out / "score.json", text);
  std::cout << text;
  return report.accepted ? kExitOk : kExitRejected;
}

int run_eval(const std::vector<DatasetRecord>& dataset, const std::map<std::string, bool>& labels,
             const RunConfig& config, CacheMode mode) {
  fs::path out(config.out_dir);
  Session session(config, mode, out / "transcript.jsonl");
  json records = json::array();
  for (const auto& r : dataset) {
    json j = {{"id", r.id}, {"informal_text", r.informal_text}};
    if (r.ground_truth_label) j["ground_truth_label"] = *r.ground_truth_label;
    if (r.reference_formal) j["reference_formal"] = *r.reference_formal;
    records.push_back(std::move(j));
  }
  session.write_header("eval", {{"dataset", records}, {"labels", labels}});
  auto backends = session.pipeline_backends();
  BenchmarkOptions options{session.pipeline_options(), config.workers};
  auto report = run_benchmark(dataset, backends, options, labels);
  auto j = to_json(report);
  j["call_stats"] = to_json(call_stats(session.transcript().records()));
  write_file(out / "report.json", j.dump(2) + "\n");
  auto table = format_table(report);
  write_file(out / "report.txt", table);
  std::cout << table;
  return kExitOk;
}

}  // namespace

InformalStatement read_statement(const FormalizeArgs& args) {
  std::string text = read_file(args.input, "input");
  auto ext = args.input.extension().string();
  InformalStatement st;
  if (ext == ".json" || ext == ".jsonl") {
    std::string first = text;
    if (ext == ".jsonl") {
      std::istringstream in(text);
      std::string line;
      first.clear();
      while (std::getline(in, line))
        if (!trim(line).empty()) {
          first = line;
          break;
        }
    }
    try {
      auto j = json::parse(first);
      st.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      st.text = j.at("informal_text").get<std::string>();
    } catch (const json::exception& e) {
      throw ConfigError("input", std::string("bad statement record: ") + e.what());
    }
  } else {
    st.id = args.input.stem().string();
    st.text = trim(text);
  }
  if (args.id) st.id = *args.id;
  st.validate();
  return st;
}

int cmd_formalize(const FormalizeArgs& args, const RunConfig& config, CacheMode mode) {
  return guarded([&] { return run_formalize(read_statement(args), args.score, args.dump_graph, config, mode); });
}

int cmd_score(const ScoreArgs& args, const RunConfig& config, CacheMode mode) {
  return guarded([&] {
    InformalStatement st{args.informal.stem().string(), trim(read_file(args.informal, "informal")), std::nullopt};
    st.validate();
    std::string formal = read_file(args.formal, "formal");
    if (trim(formal).empty()) throw ConfigError("formal", "formal source is empty");
    return run_score(st, formal, config, mode);
  });
}

int cmd_eval(const EvalArgs& args, const RunConfig& config, CacheMode mode) {
  return guarded([&] {
    std::vector<DatasetRecord> dataset;
    std::map<std::string, bool> labels;
    try {
      dataset = load_dataset(args.dataset);
      if (args.labels) labels = load_labels(*args.labels);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("dataset", e.what());
    }
    return run_eval(dataset, labels, config, mode);
  });
}

int cmd_replay(const ReplayArgs& args) {
  return guarded([&] {
    std::vector<json> records;
    try {
      records = Transcript::load(args.transcript);
    } catch (const std::exception& e) {
      throw ConfigError("transcript", e.what());
    }
    if (records.empty() || records.front().value("event", "") != "run_header")
      throw ConfigError("transcript", "no run header in " + args.transcript.string());
    const auto& header = records.front();
    RunConfig config = config_from_json(header.at("config"));
    config.out_dir = args.out ? args.out->string() : (fs::path(config.out_dir) / "replay").string();
    const auto& inputs = header.at("inputs");
    std::string command = header.value("command", "");
    auto statement = [&](const json& j) {
      return InformalStatement{j.at("id").get<std::string>(), j.at("text").get<std::string>(), std::nullopt};
    };
    if (command == "formalize")
      return run_formalize(statement(inputs.at("statement")), inputs.value("score", false),
                           inputs.value("dump_graph", false), config, CacheMode::ReplayOnly);
    if (command == "score")
      return run_score(statement(inputs.at("statement")), inputs.at("formal").get<std::string>(), config,
                       CacheMode::ReplayOnly);
    if (command == "eval") {
      std::vector<DatasetRecord> dataset;
      for (const auto& j : inputs.at("dataset")) {
        DatasetRecord r{j.at("id").get<std::string>(), j.at("informal_text").get<std::string>(), std::nullopt,
                        std::nullopt};
        if (j.contains("ground_truth_label")) r.ground_truth_label = j["ground_truth_label"].get<bool>();
        if (j.contains("reference_formal")) r.reference_formal = j["reference_formal"].get<std::string>();
        dataset.push_back(std::move(r));
      }
      auto labels = inputs.at("labels").get<std::map<std::string, bool>>();
      return run_eval(dataset, labels, config, CacheMode::ReplayOnly);
    }
    throw ConfigError("transcript", "unknown command '" + command + "'");
  });
}

}  // namespace aria
