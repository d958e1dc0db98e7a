#include "refinery/eval.hpp"

#include <algorithm>

#include "doctest.h"

#include "mock_backends.hpp"

using namespace refinery;
using testmocks::MarkerFeedback;
using testmocks::MonotoneSummarizer;
using testmocks::StaticSummarizer;

namespace {

std::shared_ptr<ScriptedBackend> fixed_feedback() {
  return std::make_shared<ScriptedBackend>(
      std::vector<ScriptedRule>{
          {"Question one?", "Answer: alpha one\nEvidence: E one."},
          {"Question two?", "Answer: beta two\nEvidence: E two."},
          {"Question three?", "Answer: off the mark\nEvidence: E three."},
          {"Question four?", "Unanswerable."},
      },
      AgentRole::feedback);
}

std::vector<QAPair> four_pairs() {
  return {
      {"q1", "Question one?", "alpha one", std::nullopt, QaSource::human},
      {"q2", "Question two?", "beta two", std::nullopt, QaSource::human},
      {"q3", "Question three?", "gamma three", std::nullopt, QaSource::human},
      {"q4", "Question four?", "delta four", std::nullopt, QaSource::human},
  };
}

}  // namespace

TEST_CASE("qa consistency counts correct answered responses") {
  auto backend = fixed_feedback();
  const GenerationParams params = default_params(AgentRole::feedback);
  // q1, q2 correct; q3 wrong; q4 unanswerable.
  CHECK(qa_consistency_score(*backend, "any summary", four_pairs(), 0.5,
                             params) == doctest::Approx(0.5));

  ScriptedBackend all_good(
      {{"", "Answer: alpha one\nEvidence: E."}}, AgentRole::feedback);
  std::vector<QAPair> single = {{"q1", "Q?", "alpha one", std::nullopt,
                                 QaSource::human}};
  CHECK(qa_consistency_score(all_good, "s", single, 0.5, params) == 1.0);

  ScriptedBackend silent({{"", "Unanswerable."}}, AgentRole::feedback);
  CHECK(qa_consistency_score(silent, "s", four_pairs(), 0.5, params) == 0.0);

  CHECK_THROWS_AS(qa_consistency_score(*backend, "s", {}, 0.5, params),
                  std::invalid_argument);
}

TEST_CASE("qa consistency is invariant to question order and repeatable") {
  auto backend = fixed_feedback();
  const GenerationParams params = default_params(AgentRole::feedback);
  std::vector<QAPair> pairs = four_pairs();
  const double forward =
      qa_consistency_score(*backend, "summary", pairs, 0.5, params);
  std::reverse(pairs.begin(), pairs.end());
  const double backward =
      qa_consistency_score(*backend, "summary", pairs, 0.5, params);
  CHECK(forward == backward);
  CHECK(forward ==
        qa_consistency_score(*backend, "summary", four_pairs(), 0.5, params));
}

TEST_CASE("rouge_report") {
  CHECK(rouge_report("same words here", "same words here") == 1.0);
  CHECK(rouge_report("alpha beta", "gamma delta") == 0.0);
  CHECK(rouge_report("a b c", "a b d") == doctest::Approx(11.0 / 18.0));
}

TEST_CASE("convergence curve rises to one for the monotone mock") {
  const Document doc = testmocks::monotone_doc(4);
  MonotoneSummarizer summarizer(4);
  MarkerFeedback feedback(4);
  RefineConfig config;
  config.max_steps = 8;
  config.batch_size = 4;
  config.seed = 3;
  const RefineTrace trace =
      run_refinement(summarizer, &feedback, doc, config);
  REQUIRE(trace.steps.size() == 8);

  MarkerFeedback scorer(4);
  const auto curve = convergence_curve(
      trace, doc, scorer, 0.5, default_params(AgentRole::feedback));
  REQUIRE(curve.size() == 8);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].second >= curve[i - 1].second);
    CHECK(curve[i].first == static_cast<int>(i) + 1);
  }
  CHECK(curve.back().second == 1.0);
  CHECK(curve.front().second == doctest::Approx(0.25));
  // All four answers are present from step 4 on.
  CHECK(curve[3].second == 1.0);
}

TEST_CASE("single step trace yields a single point") {
  const Document doc = testmocks::monotone_doc(2);
  MonotoneSummarizer summarizer(2);
  MarkerFeedback feedback(2);
  RefineConfig config;
  config.max_steps = 1;
  config.batch_size = 2;
  const RefineTrace trace =
      run_refinement(summarizer, &feedback, doc, config);
  MarkerFeedback scorer(2);
  CHECK(convergence_curve(trace, doc, scorer, 0.5,
                          default_params(AgentRole::feedback))
            .size() == 1);
}

namespace {

Corpus strategy_corpus() {
  Corpus corpus;
  corpus.documents.push_back(testmocks::monotone_doc(4));
  return corpus;
}

RefineTrace isqa_trace(const Document& doc) {
  MonotoneSummarizer summarizer(4);
  MarkerFeedback feedback(4);
  RefineConfig config;
  config.max_steps = 5;
  config.batch_size = 4;
  config.seed = 1;
  return run_refinement(summarizer, &feedback, doc, config);
}

RefineTrace generic_trace(const Document& doc) {
  StaticSummarizer summarizer("The study reports results. " +
                              testmocks::finding_sentence(1));
  RefineConfig config;
  config.max_steps = 5;
  config.batch_size = 4;
  config.feedback_mode = FeedbackMode::generic;
  return run_refinement(summarizer, nullptr, doc, config);
}

RefineTrace prehoc_trace(const Document& doc) {
  StaticSummarizer summarizer("The study is pleasant to read.");
  RefineConfig config;
  config.max_steps = 1;
  config.batch_size = 4;
  config.feedback_mode = FeedbackMode::none;
  config.initial_prompt = PromptFamily::prehoc_1;
  return run_refinement(summarizer, nullptr, doc, config);
}

}  // namespace

TEST_CASE("strategy comparison ranks isqa > generic > prehoc in the mock") {
  const Corpus corpus = strategy_corpus();
  const Document& doc = corpus.documents[0];
  std::map<std::string, std::vector<RefineTrace>> runs;
  runs["isqa"] = {isqa_trace(doc)};
  runs["generic"] = {generic_trace(doc)};
  runs["prehoc"] = {prehoc_trace(doc)};

  MarkerFeedback scorer(4);
  const StrategyComparison comparison = compare_strategies(
      runs, scorer, corpus, 0.5, default_params(AgentRole::feedback));
  REQUIRE(comparison.rows.size() == 3);

  std::map<std::string, double> by_label;
  for (const auto& row : comparison.rows) {
    by_label[row.strategy] = row.qa_consistency;
    CHECK(row.n_docs == 1);
  }
  CHECK(by_label.at("isqa") > by_label.at("generic"));
  CHECK(by_label.at("generic") > by_label.at("prehoc"));

  const std::string csv = comparison.to_csv();
  CHECK(csv.rfind("strategy,qa_consistency,rouge,n_docs\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("identical runs under two labels produce identical rows") {
  const Corpus corpus = strategy_corpus();
  const Document& doc = corpus.documents[0];
  const RefineTrace trace = isqa_trace(doc);
  std::map<std::string, std::vector<RefineTrace>> runs;
  runs["one"] = {trace};
  runs["two"] = {trace};
  MarkerFeedback scorer(4);
  const StrategyComparison comparison = compare_strategies(
      runs, scorer, corpus, 0.5, default_params(AgentRole::feedback));
  REQUIRE(comparison.rows.size() == 2);
  CHECK(comparison.rows[0].qa_consistency ==
        comparison.rows[1].qa_consistency);
  CHECK(comparison.rows[0].rouge == comparison.rows[1].rouge);
}

TEST_CASE("mismatched document sets are rejected with the differing ids") {
  Corpus corpus = strategy_corpus();
  Document extra = testmocks::monotone_doc(4);
  extra.id = "extra-doc";
  corpus.documents.push_back(extra);

  std::map<std::string, std::vector<RefineTrace>> runs;
  runs["full"] = {isqa_trace(corpus.documents[0]),
                  isqa_trace(corpus.documents[1])};
  runs["full"][1].doc_id = "extra-doc";
  runs["short"] = {isqa_trace(corpus.documents[0])};

  MarkerFeedback scorer(4);
  try {
    compare_strategies(runs, scorer, corpus, 0.5,
                       default_params(AgentRole::feedback));
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("extra-doc") != std::string::npos);
  }
}

TEST_CASE("report json mirrors the scores") {
  FactualityReport report;
  report.per_document.push_back({"d1", 0.5, 0.25});
  report.per_document.push_back({"d2", std::nullopt, std::nullopt});
  report.aggregate_qa_consistency = 0.5;
  report.curves["d1"] = {{1, 0.25}, {2, 0.5}};
  const nlohmann::json j = report.to_json();
  CHECK(j.at("per_document").size() == 2);
  CHECK(j.at("per_document")[0].at("qa_consistency").get<double>() == 0.5);
  CHECK(j.at("per_document")[1].at("qa_consistency").is_null());
  CHECK(j.at("aggregate").at("qa_consistency").get<double>() == 0.5);
  CHECK(j.at("aggregate").at("rouge").is_null());
  CHECK(j.at("curves").at("d1").size() == 2);
}
