#include "refinery/refine.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "refinery/errors.hpp"
#include "refinery/textnorm.hpp"
#include "refinery/version.hpp"

namespace refinery {
namespace {

using nlohmann::json;

// Engine-output uniform draw. std::uniform_int_distribution is
// implementation-defined, so traces would differ across standard
// libraries; rejection sampling on the raw engine keeps batches
// reproducible everywhere.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t value = rng();
  while (value >= limit) value = rng();
  return value % n;
}

void fisher_yates(std::vector<std::string>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t j = uniform_below(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

json item_to_json(const FeedbackItem& item) {
  json obj;
  obj["qid"] = item.qid;
  obj["evidence"] = item.evidence;
  obj["answer"] = item.predicted_answer;
  obj["score"] = item.score;
  obj["label"] = std::string(to_string(item.label));
  obj["iteration"] = item.iteration;
  obj["evidence_in_summary"] = item.evidence_in_summary;
  return obj;
}

FeedbackItem item_from_json(const json& obj) {
  FeedbackItem item;
  item.qid = obj.at("qid").get<std::string>();
  item.evidence = obj.at("evidence").get<std::string>();
  item.predicted_answer = obj.at("answer").get<std::string>();
  item.score = obj.at("score").get<double>();
  item.label = obj.at("label").get<std::string>() == "fact"
                   ? FactLabel::fact
                   : FactLabel::nonfact;
  item.iteration = obj.at("iteration").get<int>();
  item.evidence_in_summary = obj.at("evidence_in_summary").get<bool>();
  return item;
}

json items_to_json(const std::vector<FeedbackItem>& items) {
  json arr = json::array();
  for (const auto& item : items) arr.push_back(item_to_json(item));
  return arr;
}

std::vector<FeedbackItem> items_from_json(const json& arr) {
  std::vector<FeedbackItem> items;
  for (const auto& obj : arr) items.push_back(item_from_json(obj));
  return items;
}

json step_to_json(const StepRecord& step) {
  json obj;
  obj["step"] = step.step;
  obj["prompt"] = step.prompt;
  obj["summary"] = step.summary;
  obj["batch"] = step.batch;
  json qa = json::array();
  for (const auto& record : step.qa) {
    json entry;
    entry["qid"] = record.qid;
    entry["prompt"] = record.prompt;
    entry["raw_output"] = record.response.raw_output;
    entry["outcome"] = std::string(to_string(record.response.outcome));
    entry["answer"] =
        record.response.answer ? json(*record.response.answer) : json(nullptr);
    entry["evidence"] = record.response.evidence
                            ? json(*record.response.evidence)
                            : json(nullptr);
    qa.push_back(std::move(entry));
  }
  obj["qa"] = std::move(qa);
  obj["items"] = items_to_json(step.items);
  obj["pools"] = {{"facts", items_to_json(step.facts_after)},
                  {"nonfacts", items_to_json(step.nonfacts_after)}};
  obj["prompt_after"] = step.prompt_after;
  return obj;
}

StepRecord step_from_json(const json& obj) {
  StepRecord step;
  step.step = obj.at("step").get<int>();
  step.prompt = obj.at("prompt").get<std::string>();
  step.summary = obj.at("summary").get<std::string>();
  step.batch = obj.at("batch").get<std::vector<std::string>>();
  for (const auto& entry : obj.at("qa")) {
    QaRecord record;
    record.qid = entry.at("qid").get<std::string>();
    record.prompt = entry.at("prompt").get<std::string>();
    record.response.raw_output = entry.at("raw_output").get<std::string>();
    const std::string outcome = entry.at("outcome").get<std::string>();
    if (outcome == "answered") {
      record.response.outcome = FeedbackOutcome::answered;
      record.response.answer = entry.at("answer").get<std::string>();
      record.response.evidence = entry.at("evidence").get<std::string>();
    } else if (outcome == "unanswerable") {
      record.response.outcome = FeedbackOutcome::unanswerable;
    } else {
      record.response.outcome = FeedbackOutcome::parse_error;
    }
    step.qa.push_back(std::move(record));
  }
  step.items = items_from_json(obj.at("items"));
  step.facts_after = items_from_json(obj.at("pools").at("facts"));
  step.nonfacts_after = items_from_json(obj.at("pools").at("nonfacts"));
  step.prompt_after = obj.at("prompt_after").get<std::string>();
  return step;
}

struct QueryOutcome {
  QaRecord record;
  std::optional<FeedbackItem> item;
};

// Issue the batch's feedback queries. Endpoint backends run them
// concurrently (bounded by the backend's own in-flight gate); scripted
// and replay backends are sequential. Results come back in batch order
// either way.
std::vector<QueryOutcome> run_batch_queries(
    AgentBackend& feedback, const std::vector<const QAPair*>& batch,
    const std::string& context, const RefineConfig& config, int step) {
  std::vector<QueryOutcome> outcomes(batch.size());
  auto one = [&](std::size_t i) {
    const QAPair& qa = *batch[i];
    FeedbackQueryResult result =
        query_feedback_full(feedback, context, qa.question,
                            config.feedback_params);
    QueryOutcome outcome;
    outcome.record.qid = qa.qid;
    outcome.record.prompt = result.record.prompt;
    outcome.record.response = result.response;
    outcome.item = classify(result.response, qa.gold_answer, config.epsilon,
                            step, qa.qid);
    return outcome;
  };
  if (feedback.kind() == BackendKind::endpoint && batch.size() > 1) {
    std::vector<std::future<QueryOutcome>> futures;
    futures.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      futures.push_back(
          std::async(std::launch::async, [&one, i] { return one(i); }));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      outcomes[i] = futures[i].get();
    }
  } else {
    for (std::size_t i = 0; i < batch.size(); ++i) outcomes[i] = one(i);
  }
  return outcomes;
}

// Shared main loop used by both run_refinement and resume_from_trace.
RefineTrace run_loop(AgentBackend& summarizer, AgentBackend* feedback,
                     const Document& doc, const RefineConfig& config,
                     RefineTrace trace, FactPools pools, QaSampler sampler,
                     std::string prompt, int first_step) {
  Document working = doc;
  working.body = truncate_to_budget(
      doc.body, static_cast<std::size_t>(config.summarizer_params.max_input_tokens));

  for (int step = first_step; step <= config.max_steps; ++step) {
    StepRecord record;
    record.step = step;
    record.prompt = prompt;

    std::vector<std::string> batch_qids;
    std::vector<const QAPair*> batch;
    if (config.feedback_mode == FeedbackMode::isqa) {
      batch_qids =
          sampler.next_batch(static_cast<std::size_t>(config.batch_size));
      for (const auto& qid : batch_qids) batch.push_back(doc.find_qa(qid));
    }
    record.batch = batch_qids;

    std::size_t inserted = 0;
    try {
      record.summary =
          summarizer.generate(ChatPrompt{record.prompt}, config.summarizer_params)
              .output;

      if (config.feedback_mode == FeedbackMode::isqa) {
        const std::string context = truncate_to_budget(
            record.summary,
            static_cast<std::size_t>(config.feedback_params.max_input_tokens));
        auto outcomes =
            run_batch_queries(*feedback, batch, context, config, step);
        // Pool updates apply in batch-index order regardless of response
        // arrival order.
        for (auto& outcome : outcomes) {
          record.qa.push_back(outcome.record);
          if (outcome.item) {
            outcome.item->evidence_in_summary =
                record.summary.find(outcome.item->evidence) !=
                std::string::npos;
            record.items.push_back(*outcome.item);
            if (pools.update(*outcome.item) == PoolUpdate::inserted) {
              ++inserted;
            }
          }
        }
      }
    } catch (const BackendError& e) {
      trace.status = TraceStatus::failed;
      trace.failed_at_step = step;
      trace.error = e.what();
      return trace;
    }

    switch (config.feedback_mode) {
      case FeedbackMode::isqa:
        record.prompt_after = render_refine(working, pools).text;
        break;
      case FeedbackMode::generic:
        record.prompt_after = render_generic_feedback(working).text;
        break;
      case FeedbackMode::none:
        record.prompt_after = record.prompt;
        break;
    }
    record.facts_after = pools.facts();
    record.nonfacts_after = pools.nonfacts();
    prompt = record.prompt_after;
    trace.steps.push_back(std::move(record));

    if (config.early_stop && config.feedback_mode == FeedbackMode::isqa &&
        inserted == 0) {
      trace.status = TraceStatus::early_stopped;
      return trace;
    }
  }
  trace.status = TraceStatus::completed;
  return trace;
}

std::vector<std::string> doc_qids(const Document& doc) {
  std::vector<std::string> qids;
  qids.reserve(doc.qa_pairs.size());
  for (const auto& qa : doc.qa_pairs) qids.push_back(qa.qid);
  return qids;
}

}  // namespace

void to_json(json& j, const GenerationParams& params) {
  j = json{};
  j["num_beams"] = params.num_beams;
  j["temperature"] = params.temperature;
  j["no_repeat_ngram"] = params.no_repeat_ngram;
  j["max_input_tokens"] = params.max_input_tokens;
  j["max_new_tokens"] = params.max_new_tokens;
  j["min_new_tokens"] = params.min_new_tokens;
  j["seed"] = params.seed ? json(*params.seed) : json(nullptr);
}

void from_json(const json& j, GenerationParams& params) {
  params.num_beams = j.at("num_beams").get<int>();
  params.temperature = j.at("temperature").get<double>();
  params.no_repeat_ngram = j.at("no_repeat_ngram").get<int>();
  params.max_input_tokens = j.at("max_input_tokens").get<int>();
  params.max_new_tokens = j.at("max_new_tokens").get<int>();
  params.min_new_tokens = j.at("min_new_tokens").get<int>();
  params.seed.reset();
  if (j.contains("seed") && !j.at("seed").is_null()) {
    params.seed = j.at("seed").get<std::int64_t>();
  }
}

void to_json(json& j, const RefineConfig& config) {
  j = json{};
  j["max_steps"] = config.max_steps;
  j["batch_size"] = config.batch_size;
  j["epsilon"] = config.epsilon;
  j["prompt_family"] = std::string(family_name(config.initial_prompt));
  j["seed"] = config.seed;
  j["sampling"] = std::string(to_string(config.sampling));
  j["feedback_mode"] = std::string(to_string(config.feedback_mode));
  j["early_stop"] = config.early_stop;
  j["summarizer_params"] = config.summarizer_params;
  j["feedback_params"] = config.feedback_params;
}

void from_json(const json& j, RefineConfig& config) {
  config.max_steps = j.at("max_steps").get<int>();
  config.batch_size = j.at("batch_size").get<int>();
  config.epsilon = j.at("epsilon").get<double>();
  const auto family_text = j.at("prompt_family").get<std::string>();
  if (auto family = family_from_name(family_text)) {
    config.initial_prompt = *family;
  } else {
    throw std::invalid_argument("unknown prompt family \"" + family_text +
                                "\"");
  }
  config.seed = j.at("seed").get<std::uint64_t>();
  const auto sampling_text = j.at("sampling").get<std::string>();
  if (auto mode = sampling_mode_from_string(sampling_text)) {
    config.sampling = *mode;
  } else {
    throw std::invalid_argument("unknown sampling mode \"" + sampling_text +
                                "\"");
  }
  const auto mode_text = j.at("feedback_mode").get<std::string>();
  if (auto mode = feedback_mode_from_string(mode_text)) {
    config.feedback_mode = *mode;
  } else {
    throw std::invalid_argument("unknown feedback mode \"" + mode_text +
                                "\"");
  }
  config.early_stop = j.at("early_stop").get<bool>();
  config.summarizer_params =
      j.at("summarizer_params").get<GenerationParams>();
  config.feedback_params = j.at("feedback_params").get<GenerationParams>();
}

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::without_replacement ? "without_replacement"
                                                   : "with_replacement";
}

std::string_view to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::isqa: return "isqa";
    case FeedbackMode::generic: return "generic";
    case FeedbackMode::none: return "none";
  }
  return "isqa";
}

std::optional<SamplingMode> sampling_mode_from_string(std::string_view name) {
  if (name == "without_replacement") return SamplingMode::without_replacement;
  if (name == "with_replacement") return SamplingMode::with_replacement;
  return std::nullopt;
}

std::optional<FeedbackMode> feedback_mode_from_string(std::string_view name) {
  if (name == "isqa") return FeedbackMode::isqa;
  if (name == "generic") return FeedbackMode::generic;
  if (name == "none") return FeedbackMode::none;
  return std::nullopt;
}

std::string_view to_string(TraceStatus status) {
  switch (status) {
    case TraceStatus::completed: return "completed";
    case TraceStatus::early_stopped: return "early_stopped";
    case TraceStatus::failed: return "failed";
    case TraceStatus::partial: return "partial";
  }
  return "partial";
}

void RefineConfig::validate() const {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("epsilon must be in [0, 1]");
  }
  switch (initial_prompt) {
    case PromptFamily::baseline_1:
    case PromptFamily::baseline_2:
    case PromptFamily::prehoc_1:
    case PromptFamily::prehoc_2:
    case PromptFamily::prehoc_3:
      break;
    default:
      throw std::invalid_argument(
          "initial prompt family must be a baseline or prehoc family");
  }
  summarizer_params.validate();
  feedback_params.validate();
}

QaSampler::QaSampler(std::vector<std::string> qids, std::uint64_t seed,
                     SamplingMode mode)
    : order_(std::move(qids)), rng_(seed), mode_(mode) {
  if (order_.empty()) {
    throw std::invalid_argument("sampler needs at least one qid");
  }
  if (mode_ == SamplingMode::without_replacement) reshuffle();
}

void QaSampler::reshuffle() {
  fisher_yates(order_, rng_);
  cursor_ = 0;
}

std::vector<std::string> QaSampler::next_batch(std::size_t size) {
  if (size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<std::string> batch;
  if (mode_ == SamplingMode::with_replacement) {
    batch.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      batch.push_back(order_[uniform_below(rng_, order_.size())]);
    }
    return batch;
  }
  // Without replacement: serve the remainder as a short batch when the
  // permutation runs out, then reshuffle for the next call.
  const std::size_t take = std::min(size, order_.size() - cursor_);
  batch.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
               order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
  cursor_ += take;
  if (cursor_ >= order_.size()) reshuffle();
  return batch;
}

const std::string& RefineTrace::final_summary() const {
  static const std::string empty;
  return steps.empty() ? empty : steps.back().summary;
}

RefineTrace run_refinement(AgentBackend& summarizer, AgentBackend* feedback,
                           const Document& doc, const RefineConfig& config) {
  config.validate();
  if (config.feedback_mode == FeedbackMode::isqa) {
    if (feedback == nullptr) {
      throw std::invalid_argument("isqa mode needs a feedback backend");
    }
    if (doc.qa_pairs.empty()) {
      throw std::invalid_argument("document " + doc.id +
                                  " has no QA pairs to refine against");
    }
  }

  RefineTrace trace;
  trace.doc_id = doc.id;
  trace.engine_version = std::string(kEngineVersion);
  trace.config = config;

  Document working = doc;
  working.body = truncate_to_budget(
      doc.body,
      static_cast<std::size_t>(config.summarizer_params.max_input_tokens));
  std::string p0 = render_initial(working, config.initial_prompt).text;

  // The sampler is constructed even for feedback-free modes so resuming
  // stays uniform; it is only advanced in isqa mode.
  std::vector<std::string> qids =
      doc.qa_pairs.empty() ? std::vector<std::string>{"-"} : doc_qids(doc);
  QaSampler sampler(std::move(qids), config.seed, config.sampling);

  return run_loop(summarizer, feedback, doc, config, std::move(trace),
                  FactPools{}, std::move(sampler), std::move(p0), 1);
}

RefineTrace resume_from_trace(const RefineTrace& trace,
                              AgentBackend& summarizer,
                              AgentBackend* feedback, const Document& doc,
                              const RefineConfig& config) {
  config.validate();
  if (trace.status == TraceStatus::completed ||
      trace.status == TraceStatus::early_stopped) {
    return trace;
  }
  if (!(config == trace.config)) {
    throw ConfigMismatchError(
        "resume configuration differs from the trace snapshot for document " +
        trace.doc_id);
  }
  if (trace.doc_id != doc.id) {
    throw ConfigMismatchError("trace belongs to document " + trace.doc_id +
                              ", not " + doc.id);
  }
  if (config.feedback_mode == FeedbackMode::isqa && feedback == nullptr) {
    throw std::invalid_argument("isqa mode needs a feedback backend");
  }
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (trace.steps[i].step != static_cast<int>(i) + 1) {
      throw CorruptTraceError("trace steps are not contiguous from 1");
    }
  }

  // Rebuild sampler state by replaying the completed steps' draws and
  // checking them against the recorded batches.
  std::vector<std::string> qids =
      doc.qa_pairs.empty() ? std::vector<std::string>{"-"} : doc_qids(doc);
  QaSampler sampler(std::move(qids), config.seed, config.sampling);
  if (config.feedback_mode == FeedbackMode::isqa) {
    for (const auto& step : trace.steps) {
      const auto replayed =
          sampler.next_batch(static_cast<std::size_t>(config.batch_size));
      if (replayed != step.batch) {
        throw CorruptTraceError(
            "recorded batch for step " + std::to_string(step.step) +
            " does not match the seeded sampler");
      }
    }
  }

  FactPools pools;
  std::string prompt;
  if (trace.steps.empty()) {
    Document working = doc;
    working.body = truncate_to_budget(
        doc.body,
        static_cast<std::size_t>(config.summarizer_params.max_input_tokens));
    prompt = render_initial(working, config.initial_prompt).text;
  } else {
    const StepRecord& last = trace.steps.back();
    pools = FactPools::from_lists(last.facts_after, last.nonfacts_after);
    prompt = last.prompt_after;
  }

  RefineTrace resumed = trace;
  resumed.status = TraceStatus::partial;
  resumed.failed_at_step = 0;
  resumed.error.clear();
  const int first_step = static_cast<int>(trace.steps.size()) + 1;
  return run_loop(summarizer, feedback, doc, config, std::move(resumed),
                  std::move(pools), std::move(sampler), std::move(prompt),
                  first_step);
}

void save_trace(const RefineTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write trace file: " + path.string());
  }
  json header;
  header["doc_id"] = trace.doc_id;
  header["engine_version"] = trace.engine_version;
  header["config"] = trace.config;
  out << header.dump() << '\n';
  for (const auto& step : trace.steps) {
    out << step_to_json(step).dump() << '\n';
  }
}

RefineTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read trace file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw CorruptTraceError("trace file is empty: " + path.string());
  }
  RefineTrace trace;
  try {
    json header = json::parse(line);
    trace.doc_id = header.at("doc_id").get<std::string>();
    trace.engine_version = header.at("engine_version").get<std::string>();
    trace.config = header.at("config").get<RefineConfig>();
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      trace.steps.push_back(step_from_json(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw CorruptTraceError("trace file " + path.string() +
                            " is not parseable: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptTraceError("trace file " + path.string() +
                            " is not parseable: " + e.what());
  }
  trace.status = trace.steps.size() ==
                         static_cast<std::size_t>(trace.config.max_steps)
                     ? TraceStatus::completed
                     : TraceStatus::partial;
  return trace;
}

std::vector<ReplayRecord> trace_replay_records(const RefineTrace& trace,
                                               AgentRole role) {
  std::vector<ReplayRecord> records;
  for (const auto& step : trace.steps) {
    if (role == AgentRole::summarizer) {
      records.push_back({step.prompt, step.summary});
    } else {
      for (const auto& qa : step.qa) {
        records.push_back({qa.prompt, qa.response.raw_output});
      }
    }
  }
  return records;
}

}  // namespace refinery
