// refinery: iterative factuality refinement for scientific summaries.
//
// Subcommands: validate, run, eval, compare, demo.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "refinery/agents.hpp"
#include "refinery/corpus.hpp"
#include "refinery/errors.hpp"
#include "refinery/eval.hpp"
#include "refinery/feedback.hpp"
#include "refinery/prompts.hpp"
#include "refinery/refine.hpp"
#include "refinery/textnorm.hpp"
#include "refinery/version.hpp"

#include "demo_assets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace refinery;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::mutex g_console_mutex;

void log_line(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_console_mutex);
  std::cerr << line << '\n';
}

std::string sanitize_id(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' ||
                    c == '-';
    if (!ok) c = '_';
  }
  return out;
}

std::string format3(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.3f", value);
  return buffer;
}

// ---------------------------------------------------------------------------
// Backend specs
//
//   mock                      bundled deterministic scripted backend
//   scripted:<rules.json>     [{"match": "...", "response": "..."}]
//   replay:<records.jsonl>    one {"prompt": ..., "output": ...} per line
//   endpoint:<url>[,model=m][,key_env=VAR][,timeout_ms=N]
//                [,max_in_flight=N][,chat_qa]

std::shared_ptr<AgentBackend> make_scripted_from_file(const fs::path& path,
                                                      AgentRole role) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read scripted rules: " + path.string());
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("scripted rules " + path.string() + ": " + e.what());
  }
  bool chat_qa = false;
  const json* rules_json = &parsed;
  if (parsed.is_object()) {
    chat_qa = parsed.value("chat_qa", false);
    if (!parsed.contains("rules")) {
      throw UsageError("scripted rules object needs a \"rules\" array");
    }
    rules_json = &parsed.at("rules");
  }
  std::vector<ScriptedRule> rules;
  for (const auto& entry : *rules_json) {
    rules.push_back(ScriptedRule{entry.at("match").get<std::string>(),
                                 entry.at("response").get<std::string>()});
  }
  return std::make_shared<ScriptedBackend>(std::move(rules), role, chat_qa);
}

std::shared_ptr<AgentBackend> make_replay_from_file(const fs::path& path,
                                                    AgentRole role) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read replay records: " + path.string());
  std::vector<ReplayRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      records.push_back(ReplayRecord{obj.at("prompt").get<std::string>(),
                                     obj.at("output").get<std::string>()});
    } catch (const json::exception& e) {
      throw UsageError("replay records " + path.string() + ": " + e.what());
    }
  }
  if (records.empty()) {
    throw UsageError("replay file " + path.string() + " holds no records");
  }
  return std::make_shared<ReplayBackend>(std::move(records), role);
}

std::shared_ptr<AgentBackend> make_endpoint(const std::string& rest,
                                            AgentRole role) {
  EndpointConfig config;
  std::stringstream parts(rest);
  std::string part;
  bool first = true;
  while (std::getline(parts, part, ',')) {
    if (first) {
      config.base_url = part;
      first = false;
      continue;
    }
    const auto eq = part.find('=');
    const std::string key = part.substr(0, eq);
    const std::string value =
        eq == std::string::npos ? std::string{} : part.substr(eq + 1);
    if (key == "model") {
      config.model = value;
    } else if (key == "key_env") {
      config.api_key_env = value;
    } else if (key == "timeout_ms") {
      config.timeout = std::chrono::milliseconds(std::stoll(value));
    } else if (key == "max_in_flight") {
      config.max_in_flight = std::stoi(value);
    } else if (key == "chat_qa") {
      config.chat_style_qa = value.empty() || value == "1" || value == "true";
    } else {
      throw UsageError("unknown endpoint option \"" + key + "\"");
    }
  }
  if (config.base_url.empty()) {
    throw UsageError("endpoint spec needs a base URL");
  }
  if (config.model.empty()) {
    throw UsageError("endpoint spec needs model=<name>");
  }
  try {
    return std::make_shared<EndpointBackend>(std::move(config), role);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::shared_ptr<AgentBackend> make_backend(const std::string& spec,
                                           AgentRole role) {
  if (spec == "mock") {
    return role == AgentRole::summarizer ? demo::summarizer()
                                         : demo::feedback();
  }
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (kind == "scripted") return make_scripted_from_file(rest, role);
  if (kind == "replay") return make_replay_from_file(rest, role);
  if (kind == "endpoint") return make_endpoint(rest, role);
  throw UsageError("unknown backend spec \"" + spec +
                   "\" (expected mock, scripted:..., replay:... or "
                   "endpoint:...)");
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::string corpus_path;
  std::string out_dir;
  std::string summarizer_spec;
  std::string feedback_spec;
  bool mock = false;
  RefineConfig refine;
  int parallel = 2;
  std::string log_level = "info";
};

json run_config_echo(const RunOptions& options) {
  json config = options.refine;  // RefineConfig fields
  config["corpus"] = options.corpus_path;
  config["output_dir"] = options.out_dir;
  config["summarizer"] = options.mock ? "mock" : options.summarizer_spec;
  config["feedback"] = options.mock ? "mock" : options.feedback_spec;
  config["parallel"] = options.parallel;
  config["log_level"] = options.log_level;
  return config;
}

struct DocOutcome {
  std::string id;
  TraceStatus status = TraceStatus::failed;
  int steps = 0;
  std::string error;
};

int cmd_run(const RunOptions& options) {
  options.refine.validate();
  if (options.parallel < 1) throw UsageError("--parallel must be >= 1");

  LoadReport report;
  try {
    report = load_corpus(options.corpus_path, /*strict=*/false);
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (options.log_level != "quiet") {
    for (const auto& warning : report.warnings) {
      log_line("warning: " + warning);
    }
  }
  const Corpus& corpus = report.corpus;
  if (corpus.documents.empty()) {
    std::cerr << "error: corpus holds no valid documents\n";
    return kExitUsage;
  }

  std::shared_ptr<AgentBackend> summarizer;
  std::shared_ptr<AgentBackend> feedback;
  if (options.mock) {
    summarizer = demo::summarizer();
    feedback = demo::feedback();
  } else {
    if (options.summarizer_spec.empty()) {
      throw UsageError("run needs --summarizer (or --mock)");
    }
    summarizer = make_backend(options.summarizer_spec, AgentRole::summarizer);
    if (options.refine.feedback_mode == FeedbackMode::isqa) {
      if (options.feedback_spec.empty()) {
        throw UsageError("isqa mode needs --feedback (or --mock)");
      }
      feedback = make_backend(options.feedback_spec, AgentRole::feedback);
    } else if (!options.feedback_spec.empty()) {
      feedback = make_backend(options.feedback_spec, AgentRole::feedback);
    }
  }

  fs::create_directories(options.out_dir);

  std::vector<DocOutcome> outcomes(corpus.documents.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= corpus.documents.size()) break;
      const Document& doc = corpus.documents[i];
      DocOutcome outcome;
      outcome.id = doc.id;
      try {
        RefineTrace trace =
            run_refinement(*summarizer, feedback.get(), doc, options.refine);
        outcome.status = trace.status;
        outcome.steps = static_cast<int>(trace.steps.size());
        outcome.error = trace.error;
        const std::string stem = sanitize_id(doc.id);
        save_trace(trace,
                   fs::path(options.out_dir) / (stem + ".trace.jsonl"));
        if (!trace.steps.empty()) {
          std::ofstream summary(fs::path(options.out_dir) /
                                (stem + ".summary.txt"));
          summary << trace.final_summary() << '\n';
        }
        if (options.log_level != "quiet") {
          std::string note = "[" + doc.id + "] " +
                             std::string(to_string(trace.status)) + " (" +
                             std::to_string(trace.steps.size()) + " steps)";
          if (trace.status == TraceStatus::failed) {
            note += " at step " + std::to_string(trace.failed_at_step) +
                    ": " + trace.error;
          }
          log_line(note);
        }
      } catch (const std::exception& e) {
        outcome.status = TraceStatus::failed;
        outcome.error = e.what();
        if (options.log_level != "quiet") {
          log_line("[" + doc.id + "] failed: " + outcome.error);
        }
      }
      outcomes[i] = std::move(outcome);
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(
      static_cast<std::size_t>(options.parallel), corpus.documents.size());
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();

  bool any_failed = false;
  json docs = json::array();
  for (const auto& outcome : outcomes) {
    json entry;
    entry["id"] = outcome.id;
    entry["status"] = std::string(to_string(outcome.status));
    entry["steps"] = outcome.steps;
    if (!outcome.error.empty()) entry["error"] = outcome.error;
    docs.push_back(std::move(entry));
    if (outcome.status == TraceStatus::failed) any_failed = true;
  }
  json manifest;
  manifest["engine_version"] = std::string(kEngineVersion);
  manifest["config"] = run_config_echo(options);
  manifest["documents"] = std::move(docs);
  manifest["skipped_records"] = report.skipped;
  std::ofstream out(fs::path(options.out_dir) / "run.json");
  out << manifest.dump(2) << '\n';

  return any_failed ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const std::string& corpus_path) {
  if (!fs::exists(corpus_path)) {
    std::cerr << "error: no such file: " << corpus_path << '\n';
    return kExitUsage;
  }
  try {
    const LoadReport report = load_corpus(corpus_path, /*strict=*/true);
    for (const auto& warning : report.warnings) {
      std::cerr << "warning: " << warning << '\n';
    }
    const CorpusStats stats = corpus_stats(report.corpus);
    std::cout << "ok: " << stats.documents << " documents, " << stats.qa_pairs
              << " qa pairs (beginner " << stats.beginner << ", student "
              << stats.student << ", expert " << stats.expert
              << ", unleveled " << stats.unleveled << ")\n";
    return kExitOk;
  } catch (const CorpusError& e) {
    std::cerr << e.what() << '\n';
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// eval

std::vector<RefineTrace> load_run_traces(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) {
    throw UsageError("run directory not found: " + run_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".trace.jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RefineTrace> traces;
  traces.reserve(files.size());
  for (const auto& file : files) traces.push_back(load_trace(file));
  if (traces.empty()) {
    throw UsageError("no trace files under " + run_dir.string());
  }
  return traces;
}

int cmd_eval(const std::string& run_dir, const std::string& corpus_path,
             const std::string& backend_spec, double epsilon, bool with_rouge,
             bool with_curve, std::string out_path) {
  const LoadReport report = load_corpus(corpus_path, /*strict=*/false);
  auto backend = make_backend(backend_spec, AgentRole::feedback);
  const GenerationParams params = default_params(AgentRole::feedback);
  const std::vector<RefineTrace> traces = load_run_traces(run_dir);

  FactualityReport result;
  double qa_sum = 0.0;
  std::size_t qa_count = 0;
  double rouge_sum = 0.0;
  std::size_t rouge_count = 0;
  bool any_failed = false;
  for (const auto& trace : traces) {
    DocScore score;
    score.doc_id = trace.doc_id;
    const Document* doc = report.corpus.find(trace.doc_id);
    if (doc == nullptr) {
      log_line("warning: [" + trace.doc_id + "] not in the corpus, skipped");
      any_failed = true;
      result.per_document.push_back(std::move(score));
      continue;
    }
    if (doc->qa_pairs.empty()) {
      log_line("warning: [" + trace.doc_id + "] has no QA pairs");
    } else {
      try {
        score.qa_consistency = qa_consistency_score(
            *backend, trace.final_summary(), doc->qa_pairs, epsilon, params);
        qa_sum += *score.qa_consistency;
        ++qa_count;
      } catch (const BackendError& e) {
        log_line("error: [" + trace.doc_id + "] scoring failed: " + e.what());
        any_failed = true;
      }
    }
    if (with_rouge) {
      if (doc->reference_summary) {
        score.rouge =
            rouge_report(trace.final_summary(), *doc->reference_summary);
        rouge_sum += *score.rouge;
        ++rouge_count;
      } else {
        log_line("warning: [" + trace.doc_id +
                 "] has no reference summary, rouge omitted");
      }
    }
    if (with_curve && !doc->qa_pairs.empty()) {
      result.curves[trace.doc_id] =
          convergence_curve(trace, *doc, *backend, epsilon, params);
    }
    result.per_document.push_back(std::move(score));
  }
  if (qa_count > 0) {
    result.aggregate_qa_consistency = qa_sum / static_cast<double>(qa_count);
  }
  if (rouge_count > 0) {
    result.aggregate_rouge = rouge_sum / static_cast<double>(rouge_count);
  }

  if (out_path.empty()) {
    out_path = (fs::path(run_dir) / "report.json").string();
  }
  std::ofstream out(out_path);
  out << result.to_json().dump(2) << '\n';
  std::cout << "report written to " << out_path << '\n';
  return any_failed ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// compare

int cmd_compare(const std::vector<std::string>& strategy_specs,
                const std::string& corpus_path,
                const std::string& backend_spec, double epsilon,
                const std::string& out_path) {
  std::map<std::string, std::vector<RefineTrace>> runs;
  for (const auto& spec : strategy_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--strategy expects label=run_dir, got \"" + spec +
                       "\"");
    }
    runs[spec.substr(0, eq)] = load_run_traces(spec.substr(eq + 1));
  }
  const LoadReport report = load_corpus(corpus_path, /*strict=*/false);
  auto backend = make_backend(backend_spec, AgentRole::feedback);
  const GenerationParams params = default_params(AgentRole::feedback);

  StrategyComparison comparison;
  try {
    comparison =
        compare_strategies(runs, *backend, report.corpus, epsilon, params);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  const std::string csv = comparison.to_csv();
  std::cout << csv;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << csv;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// demo

int cmd_demo() {
  const Corpus corpus = demo::corpus();
  auto summarizer = demo::summarizer();
  auto feedback = demo::feedback();

  RefineConfig config;
  config.max_steps = 3;
  config.batch_size = 4;
  config.epsilon = 0.5;
  config.seed = 7;

  std::cout << "refinery demo: " << corpus.documents.size()
            << " bundled documents, " << config.max_steps
            << " refinement steps, batch " << config.batch_size
            << ", epsilon " << format3(config.epsilon) << "\n";

  for (const auto& doc : corpus.documents) {
    std::cout << "\n=== " << doc.id << " ===\n";
    const RefineTrace trace =
        run_refinement(*summarizer, feedback.get(), doc, config);

    FactPools replica;
    for (const auto& step : trace.steps) {
      std::cout << "step " << step.step << " | batch:";
      for (const auto& qid : step.batch) std::cout << ' ' << qid;
      std::cout << '\n';
      auto item = step.items.begin();
      for (const auto& qa : step.qa) {
        std::cout << "  " << qa.qid << " -> "
                  << to_string(qa.response.outcome);
        if (qa.response.outcome == FeedbackOutcome::answered &&
            item != step.items.end()) {
          const PoolUpdate effect = replica.update(*item);
          std::cout << " score=" << format3(item->score) << ' '
                    << to_string(item->label);
          switch (effect) {
            case PoolUpdate::inserted:
              std::cout << " (new)";
              break;
            case PoolUpdate::refreshed:
              std::cout << " (refreshed)";
              break;
            case PoolUpdate::relabeled:
              std::cout << " (moved to "
                        << (item->label == FactLabel::fact ? "facts"
                                                           : "non-facts")
                        << ")";
              break;
          }
          ++item;
        }
        std::cout << '\n';
      }
      std::cout << "  pools: " << step.facts_after.size() << " facts, "
                << step.nonfacts_after.size() << " non-facts\n";
    }

    std::cout << "final summary: " << trace.final_summary() << '\n';
    if (!trace.steps.empty()) {
      std::cout << "final facts:\n";
      for (const auto& fact : trace.steps.back().facts_after) {
        std::cout << "  + " << fact.evidence << '\n';
      }
      std::cout << "final non-facts:\n";
      for (const auto& nonfact : trace.steps.back().nonfacts_after) {
        std::cout << "  - " << nonfact.evidence << '\n';
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// config file merging: flag > config file > built-in default

void merge_run_config(const CLI::App* cmd, const std::string& config_path,
                      RunOptions& options) {
  if (config_path.empty()) return;
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot read config file: " + config_path);
  json file;
  try {
    file = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + config_path + ": " + e.what());
  }

  auto flag_given = [&](const std::string& name) {
    return cmd->count(name) > 0;
  };
  auto take = [&](const char* key, const std::string& flag, auto& target) {
    using T = std::decay_t<decltype(target)>;
    if (file.contains(key) && !flag_given(flag)) {
      target = file.at(key).get<T>();
    }
  };

  take("corpus", "--corpus", options.corpus_path);
  take("out", "--out", options.out_dir);
  take("summarizer", "--summarizer", options.summarizer_spec);
  take("feedback", "--feedback", options.feedback_spec);
  take("mock", "--mock", options.mock);
  take("max_steps", "--max-steps", options.refine.max_steps);
  take("batch_size", "--batch-size", options.refine.batch_size);
  take("epsilon", "--epsilon", options.refine.epsilon);
  take("seed", "--seed", options.refine.seed);
  take("early_stop", "--early-stop", options.refine.early_stop);
  take("parallel", "--parallel", options.parallel);
  take("log_level", "--log-level", options.log_level);
  if (file.contains("prompt_family") && !flag_given("--prompt-family")) {
    const auto name = file.at("prompt_family").get<std::string>();
    if (auto family = family_from_name(name)) {
      options.refine.initial_prompt = *family;
    } else {
      throw UsageError("config file: unknown prompt family \"" + name + "\"");
    }
  }
  if (file.contains("sampling") && !flag_given("--sampling")) {
    const auto name = file.at("sampling").get<std::string>();
    if (auto mode = sampling_mode_from_string(name)) {
      options.refine.sampling = *mode;
    } else {
      throw UsageError("config file: unknown sampling mode \"" + name + "\"");
    }
  }
  if (file.contains("feedback_mode") && !flag_given("--feedback-mode")) {
    const auto name = file.at("feedback_mode").get<std::string>();
    if (auto mode = feedback_mode_from_string(name)) {
      options.refine.feedback_mode = *mode;
    } else {
      throw UsageError("config file: unknown feedback mode \"" + name +
                       "\"");
    }
  }
  auto merge_params = [&](const char* key, GenerationParams& params) {
    if (!file.contains(key)) return;
    const json& obj = file.at(key);
    if (obj.contains("num_beams")) params.num_beams = obj.at("num_beams");
    if (obj.contains("temperature")) params.temperature = obj.at("temperature");
    if (obj.contains("no_repeat_ngram")) {
      params.no_repeat_ngram = obj.at("no_repeat_ngram");
    }
    if (obj.contains("max_input_tokens")) {
      params.max_input_tokens = obj.at("max_input_tokens");
    }
    if (obj.contains("max_new_tokens")) {
      params.max_new_tokens = obj.at("max_new_tokens");
    }
    if (obj.contains("min_new_tokens")) {
      params.min_new_tokens = obj.at("min_new_tokens");
    }
  };
  merge_params("summarizer_params", options.refine.summarizer_params);
  merge_params("feedback_params", options.refine.feedback_params);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "refinery: iterative factuality refinement for scientific summaries"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kEngineVersion));

  // validate
  auto* validate_cmd =
      app.add_subcommand("validate", "strict-check a JSONL corpus");
  std::string validate_corpus;
  validate_cmd->add_option("--corpus", validate_corpus, "corpus JSONL path")
      ->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "refine every corpus document");
  RunOptions run_options;
  std::string run_config_file;
  std::string run_prompt_family{
      family_name(run_options.refine.initial_prompt)};
  std::string run_sampling{to_string(run_options.refine.sampling)};
  std::string run_feedback_mode{to_string(run_options.refine.feedback_mode)};
  run_cmd->add_option("--corpus", run_options.corpus_path,
                      "corpus JSONL path");
  run_cmd->add_option("--out", run_options.out_dir, "output directory");
  run_cmd->add_option("--summarizer", run_options.summarizer_spec,
                      "summarizer backend spec");
  run_cmd->add_option("--feedback", run_options.feedback_spec,
                      "feedback backend spec");
  run_cmd->add_flag("--mock", run_options.mock,
                    "use the bundled scripted backends");
  run_cmd->add_option("--config", run_config_file, "JSON config file");
  run_cmd->add_option("--max-steps", run_options.refine.max_steps,
                      "refining steps");
  run_cmd->add_option("--batch-size", run_options.refine.batch_size,
                      "QA batch size");
  run_cmd->add_option("--epsilon", run_options.refine.epsilon,
                      "fact threshold on token F1");
  run_cmd->add_option("--seed", run_options.refine.seed, "sampler seed");
  run_cmd->add_option("--prompt-family", run_prompt_family,
                      "initial prompt family");
  run_cmd->add_option("--sampling", run_sampling,
                      "without_replacement | with_replacement");
  run_cmd->add_option("--feedback-mode", run_feedback_mode,
                      "isqa | generic | none");
  run_cmd->add_flag("--early-stop", run_options.refine.early_stop,
                    "stop when a step adds no new pool items");
  run_cmd->add_option("--parallel", run_options.parallel,
                      "documents refined in parallel");
  run_cmd->add_option("--log-level", run_options.log_level, "quiet | info");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "score a run directory's final summaries");
  std::string eval_run_dir;
  std::string eval_corpus;
  std::string eval_backend = "mock";
  double eval_epsilon = 0.5;
  bool eval_rouge = false;
  bool eval_curve = false;
  std::string eval_out;
  eval_cmd->add_option("--run", eval_run_dir, "run directory")->required();
  eval_cmd->add_option("--corpus", eval_corpus, "corpus JSONL path")
      ->required();
  eval_cmd->add_option("--feedback", eval_backend, "feedback backend spec");
  eval_cmd->add_option("--epsilon", eval_epsilon, "fact threshold");
  eval_cmd->add_flag("--rouge", eval_rouge, "also score ROUGE");
  eval_cmd->add_flag("--curve", eval_curve, "include per-step curves");
  eval_cmd->add_option("--out", eval_out, "report path");

  // compare
  auto* compare_cmd =
      app.add_subcommand("compare", "compare strategies across runs");
  std::vector<std::string> compare_strategy_args;
  std::string compare_corpus;
  std::string compare_backend = "mock";
  double compare_epsilon = 0.5;
  std::string compare_out;
  compare_cmd
      ->add_option("--strategy", compare_strategy_args,
                   "label=run_dir (repeatable)")
      ->required();
  compare_cmd->add_option("--corpus", compare_corpus, "corpus JSONL path")
      ->required();
  compare_cmd->add_option("--feedback", compare_backend,
                          "feedback backend spec");
  compare_cmd->add_option("--epsilon", compare_epsilon, "fact threshold");
  compare_cmd->add_option("--out", compare_out, "CSV path");

  // demo
  auto* demo_cmd = app.add_subcommand(
      "demo", "run the bundled fixture with scripted backends");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(validate_corpus);
    if (run_cmd->parsed()) {
      merge_run_config(run_cmd, run_config_file, run_options);
      if (run_cmd->count("--prompt-family") > 0) {
        if (auto family = family_from_name(run_prompt_family)) {
          run_options.refine.initial_prompt = *family;
        } else {
          throw UsageError("unknown prompt family \"" + run_prompt_family +
                           "\"");
        }
      }
      if (run_cmd->count("--sampling") > 0) {
        if (auto mode = sampling_mode_from_string(run_sampling)) {
          run_options.refine.sampling = *mode;
        } else {
          throw UsageError("unknown sampling mode \"" + run_sampling + "\"");
        }
      }
      if (run_cmd->count("--feedback-mode") > 0) {
        if (auto mode = feedback_mode_from_string(run_feedback_mode)) {
          run_options.refine.feedback_mode = *mode;
        } else {
          throw UsageError("unknown feedback mode \"" + run_feedback_mode +
                           "\"");
        }
      }
      if (run_options.corpus_path.empty()) {
        throw UsageError("run needs --corpus");
      }
      if (run_options.out_dir.empty()) throw UsageError("run needs --out");
      return cmd_run(run_options);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_run_dir, eval_corpus, eval_backend, eval_epsilon,
                      eval_rouge, eval_curve, eval_out);
    }
    if (compare_cmd->parsed()) {
      return cmd_compare(compare_strategy_args, compare_corpus,
                         compare_backend, compare_epsilon, compare_out);
    }
    if (demo_cmd->parsed()) return cmd_demo();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
