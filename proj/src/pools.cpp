#include "refinery/pools.hpp"

#include <algorithm>
#include <stdexcept>

#include "refinery/textnorm.hpp"

namespace refinery {
namespace {

std::vector<FeedbackItem>::iterator find_by_key(
    std::vector<FeedbackItem>& items, const std::string& key) {
  return std::find_if(items.begin(), items.end(),
                      [&](const FeedbackItem& item) {
                        return evidence_key(item.evidence) == key;
                      });
}

}  // namespace

std::string_view to_string(FactLabel label) {
  return label == FactLabel::fact ? "fact" : "nonfact";
}

std::string evidence_key(std::string_view evidence) {
  return join_tokens(normalize(evidence));
}

PoolUpdate FactPools::update(FeedbackItem item) {
  const std::string key = evidence_key(item.evidence);
  auto& target = item.label == FactLabel::fact ? facts_ : nonfacts_;
  auto& other = item.label == FactLabel::fact ? nonfacts_ : facts_;

  const auto indexed = index_.find(key);
  if (indexed == index_.end()) {
    index_[key] = item.label;
    target.push_back(std::move(item));
    return PoolUpdate::inserted;
  }
  if (indexed->second == item.label) {
    // Same label: refresh fields and move to the back (most recent).
    auto it = find_by_key(target, key);
    target.erase(it);
    target.push_back(std::move(item));
    return PoolUpdate::refreshed;
  }
  // Opposite label: the latest classification wins.
  auto it = find_by_key(other, key);
  other.erase(it);
  indexed->second = item.label;
  target.push_back(std::move(item));
  return PoolUpdate::relabeled;
}

FactPools FactPools::from_lists(std::vector<FeedbackItem> facts,
                                std::vector<FeedbackItem> nonfacts) {
  FactPools pools;
  for (const auto& item : facts) {
    if (!pools.index_.emplace(evidence_key(item.evidence), FactLabel::fact)
             .second) {
      throw std::invalid_argument("duplicate evidence in fact pool");
    }
  }
  for (const auto& item : nonfacts) {
    if (!pools.index_
             .emplace(evidence_key(item.evidence), FactLabel::nonfact)
             .second) {
      throw std::invalid_argument(
          "evidence appears in both pools or twice in the non-fact pool");
    }
  }
  pools.facts_ = std::move(facts);
  pools.nonfacts_ = std::move(nonfacts);
  return pools;
}

}  // namespace refinery
