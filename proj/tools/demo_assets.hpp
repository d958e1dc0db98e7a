#pragma once

// Bundled two-document fixture and scripted backends used by `refinery demo`
// and the --mock backend spec. Everything here is deterministic and
// air-gapped: no file or network access.

#include <memory>
#include <sstream>
#include <string>

#include "refinery/agents.hpp"
#include "refinery/corpus.hpp"

namespace refinery::demo {

inline const char* corpus_jsonl() {
  return R"({"id": "glownet-2024", "title": "GlowNet: Graph Attention for Citation Screening", "body": "GlowNet is a graph attention model for citation screening. The encoder is a two-layer graph encoder over citation networks. The model is trained on the OpenCite corpus of 12,000 annotated papers. Evaluation shows a gain of 4.1 points in mean average precision over the prior screening system. An ablation attributes most of the gain to the attention pooling layer.", "reference_summary": "GlowNet applies graph attention to citation screening, training on the OpenCite corpus and improving mean average precision by 4.1 points, with attention pooling driving the gains.", "qa": [{"qid": "glownet-q1", "question": "What kind of model is GlowNet?", "answer": "a graph attention model", "level": "beginner", "source": "human"}, {"qid": "glownet-q2", "question": "Which corpus is the model trained on?", "answer": "the OpenCite corpus", "level": "student", "source": "human"}, {"qid": "glownet-q3", "question": "How large is the gain in mean average precision?", "answer": "4.1 points", "level": "student", "source": "human"}, {"qid": "glownet-q4", "question": "What architecture does the encoder use?", "answer": "a two-layer graph encoder", "level": "expert", "source": "human"}, {"qid": "glownet-q5", "question": "Which hyperparameters were tuned?", "answer": "the learning rate and dropout", "level": "expert", "source": "human"}]}
{"id": "tabqa-2024", "title": "A Benchmark for Table Question Answering", "body": "We present a benchmark for table question answering built from 9,400 spreadsheet tables. Annotators wrote questions in three difficulty tiers. A linear baseline reaches 61 percent accuracy. Transformer baselines reach 74 percent accuracy, leaving clear headroom.", "reference_summary": "A table question answering benchmark with 9,400 tables and tiered questions; transformer baselines reach 74 percent accuracy.", "qa": [{"qid": "tabqa-q1", "question": "How many tables does the benchmark contain?", "answer": "9,400 tables", "level": null, "source": "human"}, {"qid": "tabqa-q2", "question": "What accuracy do transformer baselines reach?", "answer": "74 percent", "level": null, "source": "human"}, {"qid": "tabqa-q3", "question": "Who wrote the questions?", "answer": "annotators", "level": null, "source": "human"}]}
)";
}

inline Corpus corpus() {
  std::istringstream in(corpus_jsonl());
  return load_corpus_stream(in, "demo", /*strict=*/true).corpus;
}

// The mock summarizer reacts to the non-fact list: once the feedback loop
// has flagged the WebCite claim, it produces the corrected summary.
inline std::shared_ptr<AgentBackend> summarizer() {
  std::vector<ScriptedRule> rules = {
      {"It is trained on the WebCite corpus.",
       "GlowNet is a graph attention model for citation screening. It is "
       "trained on the OpenCite corpus. The encoder is a two-layer graph "
       "encoder. Evaluation shows a 4.1 point gain in mean average "
       "precision."},
      {"GlowNet",
       "GlowNet is a graph attention model for citation screening. It is "
       "trained on the WebCite corpus. Evaluation shows a 4.1 point gain in "
       "mean average precision."},
      {"table question answering",
       "The paper introduces a table question answering benchmark built "
       "from 9,400 spreadsheet tables. Transformer baselines reach 74 "
       "percent accuracy. The questions were written by annotators."},
      {"", "This paper presents a method and reports results."},
  };
  return std::make_shared<ScriptedBackend>(std::move(rules),
                                           AgentRole::summarizer);
}

// One rule per question. glownet-q1 and glownet-q4 return the same
// evidence sentence with different answers, so the evidence flips between
// the fact and non-fact pools depending on which question ran last.
inline std::shared_ptr<AgentBackend> feedback() {
  std::vector<ScriptedRule> rules = {
      {"What kind of model is GlowNet?",
       "Answer: a graph attention model\nEvidence: GlowNet is a graph "
       "attention model for citation screening."},
      {"Which corpus is the model trained on?",
       "Answer: WebCite\nEvidence: It is trained on the WebCite corpus."},
      {"How large is the gain in mean average precision?",
       "1. 4.1 points 2. Evaluation shows a 4.1 point gain in mean average "
       "precision."},
      {"What architecture does the encoder use?",
       "Answer: a graph attention model\nEvidence: GlowNet is a graph "
       "attention model for citation screening."},
      {"Which hyperparameters were tuned?", "Unanswerable."},
      {"How many tables does the benchmark contain?",
       "Answer: 9,400 tables\nEvidence: The benchmark is built from 9,400 "
       "spreadsheet tables."},
      {"What accuracy do transformer baselines reach?",
       "Evidence: Transformer baselines reach 74 percent accuracy.\nAnswer: "
       "74 percent"},
      {"Who wrote the questions?", "These results look quite strong to me."},
      {"", "Unanswerable."},
  };
  return std::make_shared<ScriptedBackend>(std::move(rules),
                                           AgentRole::feedback);
}

}  // namespace refinery::demo
