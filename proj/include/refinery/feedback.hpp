#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/agents.hpp"
#include "refinery/pools.hpp"
#include "refinery/prompts.hpp"

namespace refinery {

enum class FeedbackOutcome { answered, unanswerable, parse_error };

std::string_view to_string(FeedbackOutcome outcome);

struct FeedbackResponse {
  FeedbackOutcome outcome = FeedbackOutcome::parse_error;
  std::optional<std::string> answer;    // set iff answered
  std::optional<std::string> evidence;  // set iff answered
  std::string raw_output;

  bool operator==(const FeedbackResponse&) const = default;
};

/// Parse a feedback model output. Recognized, case-insensitively:
///   (a) "Answer:" / "Evidence:" labeled sections in either order,
///   (b) the numbered two-part form "1. ... 2. ..." (answer then evidence),
///   (c) the bare token "Unanswerable" (optionally with trailing
///       punctuation) anywhere in the first line.
/// Anything else is a parse error; the raw output is always preserved.
FeedbackResponse parse_feedback_output(std::string_view raw);

/// Fraction of outputs that are format-consistent (answered or
/// unanswerable). Throws std::invalid_argument on an empty list.
double parse_consistency_rate(const std::vector<std::string>& raws);

struct FeedbackQueryResult {
  RenderedPrompt prompt;
  GenerationRecord record;
  FeedbackResponse response;
};

/// Render the evidence-seeking QA prompt (the two-part chat variant when
/// the backend asks for it), call the backend, parse the output. Backend
/// errors propagate; parse failures never throw.
FeedbackQueryResult query_feedback_full(AgentBackend& backend,
                                        std::string_view summary,
                                        std::string_view question,
                                        const GenerationParams& params);

FeedbackResponse query_feedback(AgentBackend& backend,
                                std::string_view summary,
                                std::string_view question,
                                const GenerationParams& params);

/// Turn an answered response into a pool item: score = token_f1(answer,
/// gold), fact iff score >= epsilon (inclusive). Unanswerable and
/// parse_error responses yield no item.
std::optional<FeedbackItem> classify(const FeedbackResponse& response,
                                     std::string_view gold_answer,
                                     double epsilon, int iteration,
                                     std::string_view qid);

}  // namespace refinery
