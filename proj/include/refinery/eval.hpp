#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "refinery/agents.hpp"
#include "refinery/corpus.hpp"
#include "refinery/refine.hpp"

#include "json.hpp"

namespace refinery {

/// Fraction of dataset questions answerable correctly from the summary
/// alone: answered responses with token_f1(answer, gold) >= epsilon count
/// as hits; unanswerable and parse errors count as misses.
double qa_consistency_score(AgentBackend& feedback, std::string_view summary,
                            const std::vector<QAPair>& qa_pairs,
                            double epsilon, const GenerationParams& params);

/// Mean of ROUGE-1, ROUGE-2 and ROUGE-L against the reference summary.
double rouge_report(std::string_view summary, std::string_view reference);

/// One (step, qa_consistency) point per stored step, scored over the
/// document's full QA set.
std::vector<std::pair<int, double>> convergence_curve(
    const RefineTrace& trace, const Document& doc, AgentBackend& feedback,
    double epsilon, const GenerationParams& params);

struct DocScore {
  std::string doc_id;
  std::optional<double> qa_consistency;  // absent when the doc has no QA
  std::optional<double> rouge;           // absent without a reference summary
};

struct FactualityReport {
  std::vector<DocScore> per_document;
  std::optional<double> aggregate_qa_consistency;
  std::optional<double> aggregate_rouge;
  // doc id -> per-step curve, present when requested
  std::map<std::string, std::vector<std::pair<int, double>>> curves;

  nlohmann::json to_json() const;
};

struct StrategyRow {
  std::string strategy;
  double qa_consistency = 0.0;
  std::optional<double> rouge;
  std::size_t n_docs = 0;
};

struct StrategyComparison {
  std::vector<StrategyRow> rows;  // sorted by strategy label

  /// Header "strategy,qa_consistency,rouge,n_docs"; rouge blank when absent.
  std::string to_csv() const;
};

/// Mean qa_consistency and rouge over final summaries, one row per
/// strategy. Throws std::invalid_argument when the strategies do not cover
/// the same document ids (the message names the differing ids).
StrategyComparison compare_strategies(
    const std::map<std::string, std::vector<RefineTrace>>& runs,
    AgentBackend& feedback, const Corpus& corpus, double epsilon,
    const GenerationParams& params);

}  // namespace refinery
