#include "refinery/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "refinery/feedback.hpp"
#include "refinery/textnorm.hpp"

namespace refinery {
namespace {

std::string format_score(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

}  // namespace

double qa_consistency_score(AgentBackend& feedback, std::string_view summary,
                            const std::vector<QAPair>& qa_pairs,
                            double epsilon, const GenerationParams& params) {
  if (qa_pairs.empty()) {
    throw std::invalid_argument("qa_consistency_score needs QA pairs");
  }
  const std::string context = truncate_to_budget(
      summary, static_cast<std::size_t>(params.max_input_tokens));
  std::size_t hits = 0;
  for (const auto& qa : qa_pairs) {
    const FeedbackResponse response =
        query_feedback(feedback, context, qa.question, params);
    if (response.outcome != FeedbackOutcome::answered) continue;
    if (token_f1(*response.answer, qa.gold_answer) >= epsilon) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(qa_pairs.size());
}

double rouge_report(std::string_view summary, std::string_view reference) {
  return rouge_avg(summary, reference);
}

std::vector<std::pair<int, double>> convergence_curve(
    const RefineTrace& trace, const Document& doc, AgentBackend& feedback,
    double epsilon, const GenerationParams& params) {
  std::vector<std::pair<int, double>> curve;
  curve.reserve(trace.steps.size());
  for (const auto& step : trace.steps) {
    curve.emplace_back(step.step,
                       qa_consistency_score(feedback, step.summary,
                                            doc.qa_pairs, epsilon, params));
  }
  return curve;
}

nlohmann::json FactualityReport::to_json() const {
  nlohmann::json per_doc = nlohmann::json::array();
  for (const auto& score : per_document) {
    nlohmann::json entry;
    entry["id"] = score.doc_id;
    entry["qa_consistency"] = score.qa_consistency
                                  ? nlohmann::json(*score.qa_consistency)
                                  : nlohmann::json(nullptr);
    entry["rouge"] =
        score.rouge ? nlohmann::json(*score.rouge) : nlohmann::json(nullptr);
    per_doc.push_back(std::move(entry));
  }
  nlohmann::json obj;
  obj["per_document"] = std::move(per_doc);
  obj["aggregate"]["qa_consistency"] =
      aggregate_qa_consistency ? nlohmann::json(*aggregate_qa_consistency)
                               : nlohmann::json(nullptr);
  obj["aggregate"]["rouge"] =
      aggregate_rouge ? nlohmann::json(*aggregate_rouge)
                      : nlohmann::json(nullptr);
  if (!curves.empty()) {
    nlohmann::json curve_obj;
    for (const auto& [doc_id, points] : curves) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [step, value] : points) {
        arr.push_back({{"step", step}, {"qa_consistency", value}});
      }
      curve_obj[doc_id] = std::move(arr);
    }
    obj["curves"] = std::move(curve_obj);
  }
  return obj;
}

std::string StrategyComparison::to_csv() const {
  std::ostringstream out;
  out << "strategy,qa_consistency,rouge,n_docs\n";
  for (const auto& row : rows) {
    out << row.strategy << ',' << format_score(row.qa_consistency) << ','
        << (row.rouge ? format_score(*row.rouge) : std::string{}) << ','
        << row.n_docs << '\n';
  }
  return out.str();
}

StrategyComparison compare_strategies(
    const std::map<std::string, std::vector<RefineTrace>>& runs,
    AgentBackend& feedback, const Corpus& corpus, double epsilon,
    const GenerationParams& params) {
  if (runs.empty()) {
    throw std::invalid_argument("compare_strategies needs at least one run");
  }

  // Every strategy must cover the same document set.
  std::set<std::string> reference_ids;
  for (const auto& trace : runs.begin()->second) {
    reference_ids.insert(trace.doc_id);
  }
  for (const auto& [strategy, traces] : runs) {
    std::set<std::string> ids;
    for (const auto& trace : traces) ids.insert(trace.doc_id);
    if (ids != reference_ids) {
      std::ostringstream msg;
      msg << "strategy " << strategy << " covers a different document set:";
      for (const auto& id : ids) {
        if (reference_ids.count(id) == 0) msg << " +" << id;
      }
      for (const auto& id : reference_ids) {
        if (ids.count(id) == 0) msg << " -" << id;
      }
      throw std::invalid_argument(msg.str());
    }
  }

  StrategyComparison comparison;
  for (const auto& [strategy, traces] : runs) {
    StrategyRow row;
    row.strategy = strategy;
    row.n_docs = traces.size();
    double qa_sum = 0.0;
    double rouge_sum = 0.0;
    std::size_t rouge_count = 0;
    for (const auto& trace : traces) {
      const Document* doc = corpus.find(trace.doc_id);
      if (doc == nullptr) {
        throw std::invalid_argument("document " + trace.doc_id +
                                    " is not in the corpus");
      }
      qa_sum += qa_consistency_score(feedback, trace.final_summary(),
                                     doc->qa_pairs, epsilon, params);
      if (doc->reference_summary) {
        rouge_sum += rouge_avg(trace.final_summary(), *doc->reference_summary);
        ++rouge_count;
      }
    }
    row.qa_consistency = qa_sum / static_cast<double>(traces.size());
    if (rouge_count > 0) {
      row.rouge = rouge_sum / static_cast<double>(rouge_count);
    }
    comparison.rows.push_back(std::move(row));
  }
  return comparison;
}

}  // namespace refinery
