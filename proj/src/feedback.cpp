#include "refinery/feedback.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "refinery/textnorm.hpp"

namespace refinery {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t ifind(std::string_view haystack, std::string_view needle,
                  std::size_t from = 0) {
  if (needle.empty() || haystack.size() < needle.size()) {
    return std::string_view::npos;
  }
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k]))) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

bool first_line_declares_unanswerable(std::string_view raw) {
  const std::size_t eol = raw.find('\n');
  const std::string_view line =
      eol == std::string_view::npos ? raw : raw.substr(0, eol);
  constexpr std::string_view kToken = "unanswerable";
  std::size_t pos = 0;
  while ((pos = ifind(line, kToken, pos)) != std::string_view::npos) {
    const bool start_ok =
        pos == 0 ||
        !std::isalnum(static_cast<unsigned char>(line[pos - 1]));
    const std::size_t after = pos + kToken.size();
    const bool end_ok =
        after >= line.size() ||
        !std::isalnum(static_cast<unsigned char>(line[after]));
    if (start_ok && end_ok) return true;
    ++pos;
  }
  return false;
}

// Position of a list marker "<digit>." preceded by start/whitespace and
// followed by whitespace.
std::size_t find_marker(std::string_view raw, char digit, std::size_t from) {
  for (std::size_t i = from; i + 1 < raw.size(); ++i) {
    if (raw[i] != digit || raw[i + 1] != '.') continue;
    if (i > 0 && !is_space(raw[i - 1])) continue;
    if (i + 2 < raw.size() && !is_space(raw[i + 2])) continue;
    return i;
  }
  return std::string_view::npos;
}

FeedbackResponse answered(std::string answer, std::string evidence,
                          std::string raw) {
  FeedbackResponse response;
  response.outcome = FeedbackOutcome::answered;
  response.answer = std::move(answer);
  response.evidence = std::move(evidence);
  response.raw_output = std::move(raw);
  return response;
}

}  // namespace

std::string_view to_string(FeedbackOutcome outcome) {
  switch (outcome) {
    case FeedbackOutcome::answered: return "answered";
    case FeedbackOutcome::unanswerable: return "unanswerable";
    case FeedbackOutcome::parse_error: return "parse_error";
  }
  return "parse_error";
}

FeedbackResponse parse_feedback_output(std::string_view raw) {
  FeedbackResponse fallback;
  fallback.outcome = FeedbackOutcome::parse_error;
  fallback.raw_output = std::string(raw);

  if (first_line_declares_unanswerable(raw)) {
    FeedbackResponse response;
    response.outcome = FeedbackOutcome::unanswerable;
    response.raw_output = std::string(raw);
    return response;
  }

  constexpr std::string_view kAnswer = "answer:";
  constexpr std::string_view kEvidence = "evidence:";
  const std::size_t pa = ifind(raw, kAnswer);
  const std::size_t pe = ifind(raw, kEvidence);
  if (pa != std::string_view::npos && pe != std::string_view::npos &&
      pa != pe) {
    std::string answer_text;
    std::string evidence_text;
    if (pa < pe) {
      answer_text = trim(raw.substr(pa + kAnswer.size(), pe - pa - kAnswer.size()));
      evidence_text = trim(raw.substr(pe + kEvidence.size()));
    } else {
      evidence_text = trim(raw.substr(pe + kEvidence.size(), pa - pe - kEvidence.size()));
      answer_text = trim(raw.substr(pa + kAnswer.size()));
    }
    if (answer_text.empty() || evidence_text.empty()) return fallback;
    return answered(std::move(answer_text), std::move(evidence_text),
                    std::string(raw));
  }

  const std::size_t m1 = find_marker(raw, '1', 0);
  if (m1 != std::string_view::npos) {
    const std::size_t m2 = find_marker(raw, '2', m1 + 2);
    if (m2 != std::string_view::npos) {
      std::string answer_text = trim(raw.substr(m1 + 2, m2 - m1 - 2));
      std::string evidence_text = trim(raw.substr(m2 + 2));
      if (!answer_text.empty() && !evidence_text.empty()) {
        return answered(std::move(answer_text), std::move(evidence_text),
                        std::string(raw));
      }
    }
  }

  return fallback;
}

double parse_consistency_rate(const std::vector<std::string>& raws) {
  if (raws.empty()) {
    throw std::invalid_argument(
        "parse_consistency_rate needs at least one output");
  }
  std::size_t consistent = 0;
  for (const auto& raw : raws) {
    const auto outcome = parse_feedback_output(raw).outcome;
    if (outcome != FeedbackOutcome::parse_error) ++consistent;
  }
  return static_cast<double>(consistent) / static_cast<double>(raws.size());
}

FeedbackQueryResult query_feedback_full(AgentBackend& backend,
                                        std::string_view summary,
                                        std::string_view question,
                                        const GenerationParams& params) {
  RenderedPrompt prompt = backend.chat_style_qa()
                              ? render_gpt_qa(question, summary)
                              : render_isqa_query(question, summary);
  ChatPrompt chat{prompt.system, prompt.user};
  GenerationRecord record = backend.generate(chat, params);
  FeedbackResponse response = parse_feedback_output(record.output);
  return FeedbackQueryResult{std::move(prompt), std::move(record),
                             std::move(response)};
}

FeedbackResponse query_feedback(AgentBackend& backend,
                                std::string_view summary,
                                std::string_view question,
                                const GenerationParams& params) {
  return query_feedback_full(backend, summary, question, params).response;
}

std::optional<FeedbackItem> classify(const FeedbackResponse& response,
                                     std::string_view gold_answer,
                                     double epsilon, int iteration,
                                     std::string_view qid) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("epsilon must be in [0, 1]");
  }
  if (response.outcome != FeedbackOutcome::answered) return std::nullopt;
  FeedbackItem item;
  item.qid = std::string(qid);
  item.evidence = *response.evidence;
  item.predicted_answer = *response.answer;
  item.score = token_f1(*response.answer, gold_answer);
  item.label = item.score >= epsilon ? FactLabel::fact : FactLabel::nonfact;
  item.iteration = iteration;
  return item;
}

}  // namespace refinery
