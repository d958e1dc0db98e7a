#include "refinery/prompts.hpp"

#include <algorithm>
#include <stdexcept>

namespace refinery {
namespace {

// Embedded copies of the golden files under templates/. A test asserts
// byte equality between these constants and the shipped files.
constexpr std::string_view kBaseline1 =
    "Read this: \"{{body}}\"\n"
    "Write a summary.";

constexpr std::string_view kBaseline2 =
    "Below is a scientific paper. Please write a summary about it.\n"
    "Paper: \"{{body}}\"";

constexpr std::string_view kPrehoc1 =
    "Below is a scientific paper. Please write a summary that is factually "
    "consistent with the paper.\n"
    "Paper: \"{{body}}\"";

constexpr std::string_view kPrehoc2 =
    "Write a summary of the scientific paper below. Reduce non-facts as "
    "much as possible in the summary you generate.\n"
    "Paper: \"{{body}}\"";

constexpr std::string_view kPrehoc3 =
    "Please write a summary about the scientific paper below. Make sure the "
    "summary is factually consistent with the paper. Do not include "
    "non-factual information.\n"
    "Paper: \"{{body}}\"";

constexpr std::string_view kGenericFeedback =
    "Below is a scientific paper paired with feedback. Please write a "
    "summary based on the feedback provided.\n"
    "Paper: \"{{body}}\"\n"
    "Feedback: \"The previous summary you generated is not factually "
    "consistent with the paper. Please re-generate a summary with higher "
    "factuality. Reduce your factual errors and include more facts.\"";

constexpr std::string_view kIsqaQuery =
    "Below is a question paired with context. Please return your response "
    "in two parts:\n"
    "1. The answer to the question\n"
    "2. The most relevant evidence sentence in the context to your answer.\n"
    "If the question is unanswerable, directly return 'Unanswerable'.\n"
    "Question: \"{{question}}\"\n"
    "Context: \"{{context}}\"";

constexpr std::string_view kRefineWithFeedback =
    "Below is a scientific paper paired with feedback on factual "
    "information. Please write a summary by memorizing the provided facts "
    "and rectifying the provided non-facts.\n"
    "Facts: {{{facts}}}\n"
    "Non-Facts: {{{nonfacts}}}\n"
    "Paper: \"{{body}}\"";

constexpr std::string_view kGptQa =
    "SYSTEM: You are good at answering reading comprehension questions and "
    "extracting corresponding evidence.\n"
    "USER: Read the context\n"
    "Context: \"{{context}}\"\n"
    "Please answer the following question by:\n"
    "1. Provide the answer\n"
    "2. Provide the evidence sentence in the context.\n"
    "Please use \"Answer:\" and \"Evidence:\" to denote these two parts "
    "when generating your response: \"{{question}}\"";

std::string substitute(std::string_view text, std::string_view marker,
                       std::string_view value) {
  std::string out(text);
  const std::size_t pos = out.find(marker);
  if (pos != std::string::npos) {
    out.replace(pos, marker.size(), value);
  }
  return out;
}

std::string trim_ws(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r'))
    ++b;
  while (e > b &&
         (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' ||
          s[e - 1] == '\r'))
    --e;
  return std::string(s.substr(b, e - b));
}

// The up-to-8 most recently added items, kept in list order (oldest of the
// kept items first), rendered comma separated.
std::string render_pool(const std::vector<FeedbackItem>& items, int& count) {
  const std::size_t keep =
      std::min<std::size_t>(items.size(), kMaxRenderedPerPool);
  std::string out;
  for (std::size_t i = items.size() - keep; i < items.size(); ++i) {
    if (!out.empty()) out += ", ";
    out += trim_ws(items[i].evidence);
  }
  count = static_cast<int>(keep);
  return out;
}

void require_nonempty(std::string_view value, const char* what) {
  if (value.empty()) {
    throw std::invalid_argument(std::string("prompt rendering requires a "
                                            "non-empty ") +
                                what);
  }
}

RenderedPrompt make_single(PromptFamily family, std::string text,
                           std::string doc_id = {}) {
  RenderedPrompt prompt;
  prompt.family = family;
  prompt.user = text;
  prompt.text = std::move(text);
  prompt.doc_id = std::move(doc_id);
  return prompt;
}

}  // namespace

std::string_view family_name(PromptFamily family) {
  switch (family) {
    case PromptFamily::baseline_1: return "baseline_1";
    case PromptFamily::baseline_2: return "baseline_2";
    case PromptFamily::prehoc_1: return "prehoc_1";
    case PromptFamily::prehoc_2: return "prehoc_2";
    case PromptFamily::prehoc_3: return "prehoc_3";
    case PromptFamily::generic_feedback: return "generic_feedback";
    case PromptFamily::isqa_query: return "isqa_query";
    case PromptFamily::refine_with_feedback: return "refine_with_feedback";
    case PromptFamily::gpt_qa: return "gpt_qa";
  }
  return "baseline_2";
}

std::optional<PromptFamily> family_from_name(std::string_view name) {
  static const std::pair<std::string_view, PromptFamily> table[] = {
      {"baseline_1", PromptFamily::baseline_1},
      {"baseline_2", PromptFamily::baseline_2},
      {"prehoc_1", PromptFamily::prehoc_1},
      {"prehoc_2", PromptFamily::prehoc_2},
      {"prehoc_3", PromptFamily::prehoc_3},
      {"generic_feedback", PromptFamily::generic_feedback},
      {"isqa_query", PromptFamily::isqa_query},
      {"refine_with_feedback", PromptFamily::refine_with_feedback},
      {"gpt_qa", PromptFamily::gpt_qa},
  };
  for (const auto& [key, value] : table) {
    if (key == name) return value;
  }
  return std::nullopt;
}

std::string_view template_text(PromptFamily family) {
  switch (family) {
    case PromptFamily::baseline_1: return kBaseline1;
    case PromptFamily::baseline_2: return kBaseline2;
    case PromptFamily::prehoc_1: return kPrehoc1;
    case PromptFamily::prehoc_2: return kPrehoc2;
    case PromptFamily::prehoc_3: return kPrehoc3;
    case PromptFamily::generic_feedback: return kGenericFeedback;
    case PromptFamily::isqa_query: return kIsqaQuery;
    case PromptFamily::refine_with_feedback: return kRefineWithFeedback;
    case PromptFamily::gpt_qa: return kGptQa;
  }
  return kBaseline2;
}

RenderedPrompt render_baseline(const Document& doc, int variant) {
  require_nonempty(doc.body, "document body");
  if (variant != 1 && variant != 2) {
    throw std::invalid_argument("baseline variant must be 1 or 2");
  }
  const auto family =
      variant == 1 ? PromptFamily::baseline_1 : PromptFamily::baseline_2;
  return make_single(family,
                     substitute(template_text(family), "{{body}}", doc.body),
                     doc.id);
}

RenderedPrompt render_prehoc(const Document& doc, int variant) {
  require_nonempty(doc.body, "document body");
  PromptFamily family;
  switch (variant) {
    case 1: family = PromptFamily::prehoc_1; break;
    case 2: family = PromptFamily::prehoc_2; break;
    case 3: family = PromptFamily::prehoc_3; break;
    default:
      throw std::invalid_argument("prehoc variant must be 1, 2 or 3");
  }
  return make_single(family,
                     substitute(template_text(family), "{{body}}", doc.body),
                     doc.id);
}

RenderedPrompt render_generic_feedback(const Document& doc) {
  require_nonempty(doc.body, "document body");
  return make_single(
      PromptFamily::generic_feedback,
      substitute(template_text(PromptFamily::generic_feedback), "{{body}}",
                 doc.body),
      doc.id);
}

RenderedPrompt render_isqa_query(std::string_view question,
                                 std::string_view context) {
  require_nonempty(question, "question");
  require_nonempty(context, "context");
  std::string text =
      substitute(template_text(PromptFamily::isqa_query), "{{question}}",
                 question);
  text = substitute(text, "{{context}}", context);
  return make_single(PromptFamily::isqa_query, std::move(text));
}

RenderedPrompt render_refine(const Document& doc, const FactPools& pools) {
  require_nonempty(doc.body, "document body");
  RenderedPrompt prompt;
  prompt.family = PromptFamily::refine_with_feedback;
  prompt.doc_id = doc.id;
  std::string text(template_text(PromptFamily::refine_with_feedback));
  text = substitute(text, "{{facts}}",
                    render_pool(pools.facts(), prompt.facts_rendered));
  text = substitute(text, "{{nonfacts}}",
                    render_pool(pools.nonfacts(), prompt.nonfacts_rendered));
  text = substitute(text, "{{body}}", doc.body);
  prompt.user = text;
  prompt.text = std::move(text);
  return prompt;
}

RenderedPrompt render_gpt_qa(std::string_view question,
                             std::string_view context) {
  require_nonempty(question, "question");
  require_nonempty(context, "context");
  std::string rendered =
      substitute(template_text(PromptFamily::gpt_qa), "{{context}}", context);
  rendered = substitute(rendered, "{{question}}", question);

  constexpr std::string_view kSystemTag = "SYSTEM: ";
  constexpr std::string_view kUserTag = "\nUSER: ";
  const std::size_t user_pos = rendered.find(kUserTag);
  RenderedPrompt prompt;
  prompt.family = PromptFamily::gpt_qa;
  prompt.system = rendered.substr(kSystemTag.size(),
                                  user_pos - kSystemTag.size());
  prompt.user = rendered.substr(user_pos + kUserTag.size());
  prompt.text = *prompt.system + "\n" + prompt.user;
  return prompt;
}

RenderedPrompt render_initial(const Document& doc, PromptFamily family) {
  switch (family) {
    case PromptFamily::baseline_1: return render_baseline(doc, 1);
    case PromptFamily::baseline_2: return render_baseline(doc, 2);
    case PromptFamily::prehoc_1: return render_prehoc(doc, 1);
    case PromptFamily::prehoc_2: return render_prehoc(doc, 2);
    case PromptFamily::prehoc_3: return render_prehoc(doc, 3);
    default:
      throw std::invalid_argument(
          "initial prompt family must be a baseline or prehoc family");
  }
}

}  // namespace refinery
