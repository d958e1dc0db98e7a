#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "refinery/corpus.hpp"
#include "refinery/pools.hpp"

namespace refinery {

enum class PromptFamily {
  baseline_1,
  baseline_2,
  prehoc_1,
  prehoc_2,
  prehoc_3,
  generic_feedback,
  isqa_query,
  refine_with_feedback,
  gpt_qa,
};

std::string_view family_name(PromptFamily family);
std::optional<PromptFamily> family_from_name(std::string_view name);

/// The template for a family, byte-identical to the golden file shipped
/// under templates/. Placeholders are {{body}}, {{question}}, {{context}},
/// {{facts}}, {{nonfacts}}.
std::string_view template_text(PromptFamily family);

/// At most this many facts and this many non-facts are ever rendered.
inline constexpr int kMaxRenderedPerPool = 8;

struct RenderedPrompt {
  PromptFamily family;
  std::string text;                  // full prompt (system + user for gpt_qa)
  std::optional<std::string> system; // set only for gpt_qa
  std::string user;
  int facts_rendered = 0;
  int nonfacts_rendered = 0;
  std::string doc_id;
};

RenderedPrompt render_baseline(const Document& doc, int variant);
RenderedPrompt render_prehoc(const Document& doc, int variant);
RenderedPrompt render_generic_feedback(const Document& doc);
RenderedPrompt render_isqa_query(std::string_view question,
                                 std::string_view context);

/// Act-on-feedback prompt. Renders the 8 most recently added items per
/// pool, oldest of the kept items first, comma separated inside braces;
/// empty pools render as "{}".
RenderedPrompt render_refine(const Document& doc, const FactPools& pools);

RenderedPrompt render_gpt_qa(std::string_view question,
                             std::string_view context);

/// p_0 dispatch: baseline and pre-hoc families only.
RenderedPrompt render_initial(const Document& doc, PromptFamily family);

}  // namespace refinery
