#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace refinery {

enum class FactLabel { fact, nonfact };

std::string_view to_string(FactLabel label);

/// One classified piece of evidence from an evidence-seeking QA round.
struct FeedbackItem {
  std::string qid;
  std::string evidence;
  std::string predicted_answer;
  double score = 0.0;               // token-level F1 against the gold answer
  FactLabel label = FactLabel::fact;
  int iteration = 0;
  bool evidence_in_summary = false;  // diagnostic: evidence occurs verbatim in s_t

  bool operator==(const FeedbackItem&) const = default;
};

enum class PoolUpdate { inserted, refreshed, relabeled };

/// The accumulated fact set and non-fact set, recency ordered, deduplicated
/// by normalized evidence text. An evidence text is never in both lists;
/// the latest classification wins.
class FactPools {
 public:
  /// Apply one classified item. New evidence is appended to its list;
  /// known evidence with the same label is refreshed (recency + fields);
  /// known evidence with the opposite label moves lists.
  PoolUpdate update(FeedbackItem item);

  const std::vector<FeedbackItem>& facts() const { return facts_; }
  const std::vector<FeedbackItem>& nonfacts() const { return nonfacts_; }
  std::size_t size() const { return facts_.size() + nonfacts_.size(); }

  /// Rebuild from stored snapshots (trace resume). Throws
  /// std::invalid_argument if the lists violate exclusivity.
  static FactPools from_lists(std::vector<FeedbackItem> facts,
                              std::vector<FeedbackItem> nonfacts);

 private:
  std::vector<FeedbackItem> facts_;
  std::vector<FeedbackItem> nonfacts_;
  std::map<std::string, FactLabel> index_;  // normalized evidence -> list
};

/// Dedup key used by FactPools: normalized evidence text rejoined.
std::string evidence_key(std::string_view evidence);

}  // namespace refinery
