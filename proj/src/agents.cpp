#include "refinery/agents.hpp"

#include <condition_variable>
#include <iostream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace refinery {
namespace {

using nlohmann::json;

std::chrono::system_clock::time_point now() {
  return std::chrono::system_clock::now();
}

}  // namespace

std::string_view to_string(AgentRole role) {
  return role == AgentRole::summarizer ? "summarizer" : "feedback";
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::endpoint: return "endpoint";
    case BackendKind::scripted: return "scripted";
    case BackendKind::replay: return "replay";
    case BackendKind::custom: return "custom";
  }
  return "custom";
}

void GenerationParams::validate() const {
  if (num_beams < 1) throw std::invalid_argument("num_beams must be >= 1");
  if (temperature <= 0.0) {
    throw std::invalid_argument("temperature must be > 0");
  }
  if (no_repeat_ngram < 0) {
    throw std::invalid_argument("no_repeat_ngram must be >= 0");
  }
  if (max_input_tokens < 1) {
    throw std::invalid_argument("max_input_tokens must be >= 1");
  }
  if (max_new_tokens < 1) {
    throw std::invalid_argument("max_new_tokens must be >= 1");
  }
  if (min_new_tokens < 0 || min_new_tokens > max_new_tokens) {
    throw std::invalid_argument(
        "min_new_tokens must be in [0, max_new_tokens]");
  }
}

GenerationParams default_params(AgentRole role) {
  GenerationParams params;
  params.num_beams = 2;
  params.temperature = 1.3;
  params.no_repeat_ngram = 3;
  if (role == AgentRole::summarizer) {
    params.max_input_tokens = 2048;
    params.max_new_tokens = 200;
    params.min_new_tokens = 100;
  } else {
    params.max_input_tokens = 512;
    params.max_new_tokens = 100;
    params.min_new_tokens = 10;
  }
  return params;
}

// ---------------------------------------------------------------------------
// Scripted

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules,
                                 AgentRole role, bool chat_style_qa)
    : rules_(std::move(rules)), role_(role), chat_style_qa_(chat_style_qa) {
  if (rules_.empty()) {
    throw std::invalid_argument("scripted backend needs at least one rule");
  }
}

GenerationRecord ScriptedBackend::generate(const ChatPrompt& prompt,
                                           const GenerationParams& params) {
  params.validate();
  const std::string flat = prompt.flat();
  for (const auto& rule : rules_) {
    if (flat.find(rule.matcher) != std::string::npos) {
      GenerationRecord record;
      record.prompt = flat;
      record.output = rule.response;
      record.backend = BackendKind::scripted;
      record.timestamp = now();
      return record;
    }
  }
  throw BackendError(BackendErrorKind::no_rule_match,
                     "no scripted rule matches the prompt");
}

// ---------------------------------------------------------------------------
// Replay

ReplayBackend::ReplayBackend(std::vector<ReplayRecord> records,
                             AgentRole role, bool chat_style_qa)
    : records_(std::move(records)),
      role_(role),
      chat_style_qa_(chat_style_qa) {
  if (records_.empty()) {
    throw std::invalid_argument("replay backend needs a non-empty trace");
  }
}

GenerationRecord ReplayBackend::generate(const ChatPrompt& prompt,
                                         const GenerationParams& params) {
  params.validate();
  const std::string flat = prompt.flat();
  std::lock_guard<std::mutex> lock(mutex_);
  if (cursor_ >= records_.size()) {
    throw BackendError(BackendErrorKind::replay_exhausted,
                       "replay trace exhausted after " +
                           std::to_string(records_.size()) + " records");
  }
  const ReplayRecord& rec = records_[cursor_];
  if (rec.prompt != flat) {
    throw BackendError(BackendErrorKind::replay_mismatch,
                       "replay prompt mismatch at record " +
                           std::to_string(cursor_));
  }
  ++cursor_;
  GenerationRecord record;
  record.prompt = flat;
  record.output = rec.output;
  record.backend = BackendKind::replay;
  record.timestamp = now();
  return record;
}

std::size_t ReplayBackend::cursor() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cursor_;
}

// ---------------------------------------------------------------------------
// Endpoint

// Bounds concurrent wire requests per backend.
struct EndpointBackend::InFlightGate {
  explicit InFlightGate(int limit) : slots(limit) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex);
    cv.wait(lock, [&] { return slots > 0; });
    --slots;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex);
      ++slots;
    }
    cv.notify_one();
  }

  std::mutex mutex;
  std::condition_variable cv;
  int slots;
};

EndpointBackend::EndpointBackend(EndpointConfig config, AgentRole role)
    : config_(std::move(config)), role_(role) {
  if (config_.base_url.empty()) {
    throw std::invalid_argument("endpoint backend needs a base address");
  }
  if (config_.model.empty()) {
    throw std::invalid_argument("endpoint backend needs a model name");
  }
  if (config_.max_in_flight < 1) {
    throw std::invalid_argument("max_in_flight must be >= 1");
  }
  const auto scheme_end = config_.base_url.find("://");
  const std::size_t authority =
      scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto slash = config_.base_url.find('/', authority);
  if (slash == std::string::npos) {
    host_part_ = config_.base_url;
  } else {
    host_part_ = config_.base_url.substr(0, slash);
    path_prefix_ = config_.base_url.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
      path_prefix_.pop_back();
    }
  }
  gate_ = std::make_unique<InFlightGate>(config_.max_in_flight);
}

EndpointBackend::~EndpointBackend() = default;

std::string EndpointBackend::wire_body(const ChatPrompt& prompt,
                                       const GenerationParams& params) const {
  json messages = json::array();
  if (prompt.system) {
    messages.push_back({{"role", "system"}, {"content", *prompt.system}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt.user}});
  json body;
  body["model"] = config_.model;
  body["messages"] = std::move(messages);
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_new_tokens;
  return body.dump();
}

GenerationRecord EndpointBackend::generate(const ChatPrompt& prompt,
                                           const GenerationParams& params) {
  params.validate();
  std::call_once(dropped_params_warned_, [] {
    std::cerr << "refinery: warning: num_beams, min_new_tokens and "
                 "no_repeat_ngram are not part of the chat-completions "
                 "protocol and are not sent\n";
  });

  const std::string body = wire_body(prompt, params);
  const std::string path = path_prefix_ + "/v1/chat/completions";

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str());
        key != nullptr && key[0] != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  gate_->acquire();
  struct Release {
    InFlightGate* gate;
    ~Release() { gate->release(); }
  } release{gate_.get()};

  const auto started = std::chrono::steady_clock::now();
  auto backoff = config_.retry.initial_backoff;
  int attempt = 0;
  std::string last_error;
  int last_status = 0;

  while (attempt < config_.retry.max_attempts) {
    ++attempt;
    httplib::Client client(host_part_);
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    client.set_connection_timeout(secs.count() ? secs.count() : 1, 0);
    client.set_read_timeout(secs.count() ? secs.count() : 1, 0);
    client.set_write_timeout(secs.count() ? secs.count() : 1, 0);

    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      if (attempt < config_.retry.max_attempts) {
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(static_cast<long long>(
            static_cast<double>(backoff.count()) *
            config_.retry.backoff_multiplier));
      }
      continue;
    }
    const int status = result->status;
    if (status < 200 || status >= 300) {
      last_status = status;
      last_error = "HTTP status " + std::to_string(status);
      const bool retryable = status == 429 || status >= 500;
      if (retryable && attempt < config_.retry.max_attempts) {
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(static_cast<long long>(
            static_cast<double>(backoff.count()) *
            config_.retry.backoff_multiplier));
        continue;
      }
      throw BackendError(BackendErrorKind::http_status, last_error, attempt,
                         status);
    }

    std::string content;
    try {
      json parsed = json::parse(result->body);
      content = parsed.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(BackendErrorKind::malformed_response,
                         std::string("malformed response body: ") + e.what(),
                         attempt, status);
    }

    GenerationRecord record;
    record.prompt = prompt.flat();
    record.output = std::move(content);
    record.backend = BackendKind::endpoint;
    record.attempts = attempt;
    record.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    record.timestamp = now();
    return record;
  }

  if (last_status != 0) {
    throw BackendError(BackendErrorKind::http_status, last_error, attempt,
                       last_status);
  }
  throw BackendError(BackendErrorKind::network,
                     "transport failure after " + std::to_string(attempt) +
                         " attempts: " + last_error,
                     attempt);
}

}  // namespace refinery
