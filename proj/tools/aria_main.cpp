#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "aria/errors.hpp"
#include "aria/session.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> out, alpha, term_index, lean_project, analyzer_cmd;
  bool no_got = false, no_rag = false, no_reflect = false, no_term_grounding = false;
  std::vector<std::string> settings;
  bool verbose = false;

  void attach(CLI::App* app, bool pipeline) {
    app->add_option("--config", config, "key = value configuration file");
    app->add_option("--out", out, "output directory");
    app->add_option("--alpha", alpha, "acceptance threshold in [0, 1]");
    app->add_option("--term-index", term_index, "line-delimited term index");
    app->add_option("--analyzer-cmd", analyzer_cmd, "external term analyzer command");
    app->add_flag("--no-term-grounding", no_term_grounding, "score without retrieved term context");
    if (pipeline) {
      app->add_option("--lean-project", lean_project, "Lean project directory for the compiler");
      app->add_flag("--no-got", no_got, "flat keyword plan instead of graph expansion");
      app->add_flag("--no-rag", no_rag, "recall library names without retrieval");
      app->add_flag("--no-reflect", no_reflect, "single synthesis attempt per node");
    }
    app->add_option("--set", settings, "override a config key (key=value)");
    app->add_flag("-v,--verbose", verbose, "debug logging");
  }

  aria::RunConfig resolve() const {
    aria::RunConfig c = config.empty() ? aria::RunConfig{} : aria::load_config(config);
    for (const auto& s : settings) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw aria::ConfigError(s, "expected key=value");
      aria::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (out) c.out_dir = *out;
    if (alpha) aria::apply_setting(c, "alpha", *alpha);
    if (term_index) c.term_index = *term_index;
    if (lean_project) c.lean_project = *lean_project;
    if (analyzer_cmd) c.analyzer_cmd = *analyzer_cmd;
    c.no_got = c.no_got || no_got;
    c.no_rag = c.no_rag || no_rag;
    c.no_reflect = c.no_reflect || no_reflect;
    c.no_term_grounding = c.no_term_grounding || no_term_grounding;
    aria::validate(c);
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auto-formalization engine: plan, ground, synthesize and score Lean statements"};
  app.require_subcommand(1);
  spdlog::set_level(spdlog::level::warn);

  CommonFlags formalize_flags, score_flags, eval_flags;
  aria::FormalizeArgs formalize_args;
  std::string formalize_id;
  auto* formalize = app.add_subcommand("formalize", "formalize one informal statement");
  formalize->add_option("input", formalize_args.input, "statement text file or {id, informal_text} record")
      ->required();
  formalize->add_option("--id", formalize_id, "statement id (defaults to the file stem)");
  formalize->add_flag("--score", formalize_args.score, "run the scorer on the emitted theorem");
  formalize->add_flag("--dump-graph", formalize_args.dump_graph, "write and print the planned graph");
  formalize_flags.attach(formalize, true);

  aria::ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "score a formal statement against its informal source");
  score->add_option("--informal", score_args.informal, "informal statement file")->required();
  score->add_option("--formal", score_args.formal, "formal statement file")->required();
  score_flags.attach(score, false);

  aria::EvalArgs eval_args;
  std::string labels;
  auto* eval = app.add_subcommand("eval", "run a benchmark dataset");
  eval->add_option("--dataset", eval_args.dataset, "line-delimited dataset")->required();
  eval->add_option("--labels", labels, "line-delimited ground-truth labels {id, label}");
  eval_flags.attach(eval, true);

  aria::ReplayArgs replay_args;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "re-run a recorded transcript from cache only");
  replay->add_option("transcript", replay_args.transcript, "transcript written by an earlier run")->required();
  replay->add_option("--out", replay_out, "output directory for the replay");

  CLI11_PARSE(app, argc, argv);

  auto with_config = [](const CommonFlags& flags, auto&& run) -> int {
    if (flags.verbose) spdlog::set_level(spdlog::level::debug);
    aria::RunConfig config;
    try {
      config = flags.resolve();
    } catch (const aria::ConfigError& e) {
      std::cerr << "aria: configuration error: " << e.what() << "\n";
      return aria::kExitConfig;
    }
    return run(config);
  };

  if (*formalize) {
    if (!formalize_id.empty()) formalize_args.id = formalize_id;
    return with_config(formalize_flags, [&](const aria::RunConfig& c) { return aria::cmd_formalize(formalize_args, c); });
  }
  if (*score) return with_config(score_flags, [&](const aria::RunConfig& c) { return aria::cmd_score(score_args, c); });
  if (*eval) {
    if (!labels.empty()) eval_args.labels = labels;
    return with_config(eval_flags, [&](const aria::RunConfig& c) { return aria::cmd_eval(eval_args, c); });
  }
  if (!replay_out.empty()) replay_args.out = replay_out;
  return aria::cmd_replay(replay_args);
}
