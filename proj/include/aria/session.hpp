#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "aria/compiler.hpp"
#include "aria/config.hpp"
#include "aria/eval.hpp"
#include "aria/gateway.hpp"
#include "aria/grounding.hpp"
#include "aria/llm.hpp"
#include "aria/pipeline.hpp"
#include "aria/prompts.hpp"
#include "aria/scorer.hpp"
#include "aria/term_index.hpp"

namespace aria {

// Owns the cache, transcript, backends and clients described by a config.
class Session {
 public:
  // Under ReplayOnly, missing scripted fixtures are tolerated: no backend is
  // ever reached.
  Session(RunConfig config, CacheMode mode, const std::filesystem::path& transcript_path);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const RunConfig& config() const { return config_; }
  Transcript& transcript() { return *transcript_; }
  Gateway& gateway() { return *gateway_; }
  LlmClient& llm() { return *llm_client_; }
  CompilerClient& compiler() { return *compiler_client_; }
  const TermIndex* index() const { return index_ ? &*index_ : nullptr; }
  const Prompts& prompts() const { return prompts_; }

  ScriptedLlm* scripted_llm() { return scripted_llm_; }
  ScriptedCompiler* scripted_compiler() { return scripted_compiler_; }

  PipelineBackends pipeline_backends();
  PipelineOptions pipeline_options() const;
  ScorerBackends scorer_backends();

  // First transcript record: command, inputs, config and its digest,
  // toolchain version and term index digest.
  void write_header(std::string_view command, const nlohmann::json& inputs);

 private:
  RunConfig config_;
  Prompts prompts_;
  std::unique_ptr<ResponseCache> cache_;
  std::unique_ptr<Transcript> transcript_;
  std::unique_ptr<Gateway> gateway_;
  std::optional<TermIndex> index_;
  std::unique_ptr<LlmBackend> llm_backend_;
  std::unique_ptr<RetrievalBackend> retrieval_backend_;
  std::unique_ptr<CompilerBackend> compiler_backend_;
  std::unique_ptr<LlmClient> llm_client_;
  std::unique_ptr<RetrievalClient> retrieval_client_;
  std::unique_ptr<CompilerClient> compiler_client_;
  ScriptedLlm* scripted_llm_ = nullptr;
  ScriptedCompiler* scripted_compiler_ = nullptr;
};

enum ExitCode { kExitOk = 0, kExitRejected = 1, kExitConfig = 2, kExitCacheMiss = 3 };

struct FormalizeArgs {
  std::filesystem::path input;  // text file, or a .json/.jsonl record {id, informal_text}
  std::optional<std::string> id;
  bool score = false;
  bool dump_graph = false;
};

struct ScoreArgs {
  std::filesystem::path informal;
  std::filesystem::path formal;
};

struct EvalArgs {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> labels;
};

struct ReplayArgs {
  std::filesystem::path transcript;
  std::optional<std::filesystem::path> out;
};

// Reads the statement named by a formalize input.
InformalStatement read_statement(const FormalizeArgs& args);

// Each command writes its outputs and transcript under config.out_dir and
// returns an exit code: 0 success, 1 rejected or not compiled, 2 bad
// configuration or input, 3 cache miss during replay.
int cmd_formalize(const FormalizeArgs& args, const RunConfig& config, CacheMode mode = CacheMode::ReadWrite);
int cmd_score(const ScoreArgs& args, const RunConfig& config, CacheMode mode = CacheMode::ReadWrite);
int cmd_eval(const EvalArgs& args, const RunConfig& config, CacheMode mode = CacheMode::ReadWrite);
// Re-runs the command recorded in a transcript header from cache only.
int cmd_replay(const ReplayArgs& args);

}  // namespace aria
