#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "refinery/agents.hpp"
#include "refinery/corpus.hpp"
#include "refinery/feedback.hpp"
#include "refinery/pools.hpp"
#include "refinery/prompts.hpp"

#include "json.hpp"

namespace refinery {

enum class SamplingMode { without_replacement, with_replacement };
enum class FeedbackMode { isqa, generic, none };

std::string_view to_string(SamplingMode mode);
std::string_view to_string(FeedbackMode mode);
std::optional<SamplingMode> sampling_mode_from_string(std::string_view name);
std::optional<FeedbackMode> feedback_mode_from_string(std::string_view name);

struct RefineConfig {
  int max_steps = 8;
  int batch_size = 4;
  double epsilon = 0.5;
  PromptFamily initial_prompt = PromptFamily::baseline_2;
  std::uint64_t seed = 0;
  SamplingMode sampling = SamplingMode::without_replacement;
  FeedbackMode feedback_mode = FeedbackMode::isqa;
  bool early_stop = false;
  GenerationParams summarizer_params = default_params(AgentRole::summarizer);
  GenerationParams feedback_params = default_params(AgentRole::feedback);

  void validate() const;

  bool operator==(const RefineConfig&) const = default;
};

/// Seeded QA batch sampler. In without_replacement mode it serves a
/// permutation; when exhausted it returns the short remainder as the batch
/// and reshuffles (same rng stream) for the next call.
class QaSampler {
 public:
  QaSampler(std::vector<std::string> qids, std::uint64_t seed,
            SamplingMode mode);

  std::vector<std::string> next_batch(std::size_t size);

 private:
  void reshuffle();

  std::vector<std::string> order_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
  SamplingMode mode_;
};

enum class TraceStatus { completed, early_stopped, failed, partial };

std::string_view to_string(TraceStatus status);

struct QaRecord {
  std::string qid;
  std::string prompt;       // flat feedback prompt as sent
  FeedbackResponse response;
};

struct StepRecord {
  int step = 0;                       // 1-based
  std::string prompt;                 // p_{t-1}, used to generate summary
  std::string summary;                // s_t
  std::vector<std::string> batch;     // qids in query order
  std::vector<QaRecord> qa;
  std::vector<FeedbackItem> items;    // classified this step, applied order
  std::vector<FeedbackItem> facts_after;
  std::vector<FeedbackItem> nonfacts_after;
  std::string prompt_after;           // p_t
};

struct RefineTrace {
  std::string doc_id;
  std::string engine_version;
  RefineConfig config;
  std::vector<StepRecord> steps;
  TraceStatus status = TraceStatus::partial;
  int failed_at_step = 0;   // set when status == failed
  std::string error;        // failure description

  const std::string& final_summary() const;
};

/// Run the iterative refinement loop for one document. The feedback
/// backend may be null for feedback modes that issue no QA queries.
/// A fatal backend error yields a trace marked failed at that step with
/// all completed steps preserved; other errors throw.
RefineTrace run_refinement(AgentBackend& summarizer, AgentBackend* feedback,
                           const Document& doc, const RefineConfig& config);

/// Continue a partial or failed trace to max_steps. Completed steps are
/// not re-executed; the sampler state is rebuilt by replaying recorded
/// batches. Throws ConfigMismatchError / CorruptTraceError.
RefineTrace resume_from_trace(const RefineTrace& trace,
                              AgentBackend& summarizer,
                              AgentBackend* feedback, const Document& doc,
                              const RefineConfig& config);

void save_trace(const RefineTrace& trace, const std::filesystem::path& path);
RefineTrace load_trace(const std::filesystem::path& path);

/// Prompt/output pairs for one role, in generation order, suitable for a
/// ReplayBackend that reproduces the run without any model.
std::vector<ReplayRecord> trace_replay_records(const RefineTrace& trace,
                                               AgentRole role);

void to_json(nlohmann::json& j, const GenerationParams& params);
void from_json(const nlohmann::json& j, GenerationParams& params);
void to_json(nlohmann::json& j, const RefineConfig& config);
void from_json(const nlohmann::json& j, RefineConfig& config);

}  // namespace refinery
