#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/errors.hpp"

namespace refinery {

enum class AgentRole { summarizer, feedback };
enum class BackendKind { endpoint, scripted, replay, custom };

std::string_view to_string(AgentRole role);
std::string_view to_string(BackendKind kind);

struct GenerationParams {
  int num_beams = 2;
  double temperature = 1.3;
  int no_repeat_ngram = 3;
  int max_input_tokens = 2048;
  int max_new_tokens = 200;
  int min_new_tokens = 100;
  std::optional<std::int64_t> seed;

  /// Throws std::invalid_argument when invariants are violated
  /// (min_new_tokens <= max_new_tokens, temperature > 0, positive limits).
  void validate() const;

  bool operator==(const GenerationParams&) const = default;
};

/// Decoding defaults per role: summarizer 2048/200/100, feedback 512/100/10,
/// both with num_beams 2, temperature 1.3, no_repeat_ngram 3.
GenerationParams default_params(AgentRole role);

/// A prompt as handed to a backend. Only the gpt_qa family carries a
/// system part; everything else is a single user message.
struct ChatPrompt {
  std::optional<std::string> system;
  std::string user;

  ChatPrompt() = default;
  ChatPrompt(std::string user_text) : user(std::move(user_text)) {}
  ChatPrompt(std::optional<std::string> system_text, std::string user_text)
      : system(std::move(system_text)), user(std::move(user_text)) {}

  /// Flat text used for scripted matching and replay identity.
  std::string flat() const { return system ? *system + "\n" + user : user; }
};

struct GenerationRecord {
  std::string prompt;   // flat prompt text
  std::string output;
  BackendKind backend = BackendKind::custom;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
  std::chrono::system_clock::time_point timestamp;
};

/// Uniform generation interface over model backends. Handles are shareable
/// across threads; see each implementation for its concurrency behavior.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;

  virtual GenerationRecord generate(const ChatPrompt& prompt,
                                    const GenerationParams& params) = 0;
  virtual BackendKind kind() const = 0;
  virtual AgentRole role() const = 0;

  /// When true, evidence-seeking QA uses the two-part chat prompt family
  /// instead of the single-message one.
  virtual bool chat_style_qa() const { return false; }
};

struct ScriptedRule {
  std::string matcher;   // literal substring; empty matches everything
  std::string response;
};

/// Deterministic mock: first rule whose matcher occurs in the flat prompt
/// wins. Contention-free; the rule table is immutable.
class ScriptedBackend final : public AgentBackend {
 public:
  ScriptedBackend(std::vector<ScriptedRule> rules, AgentRole role,
                  bool chat_style_qa = false);

  GenerationRecord generate(const ChatPrompt& prompt,
                            const GenerationParams& params) override;
  BackendKind kind() const override { return BackendKind::scripted; }
  AgentRole role() const override { return role_; }
  bool chat_style_qa() const override { return chat_style_qa_; }

 private:
  std::vector<ScriptedRule> rules_;
  AgentRole role_;
  bool chat_style_qa_;
};

struct ReplayRecord {
  std::string prompt;
  std::string output;

  bool operator==(const ReplayRecord&) const = default;
};

/// Serves a recorded prompt/output sequence in order. Access to the cursor
/// is serialized; prompts must match the recording exactly.
class ReplayBackend final : public AgentBackend {
 public:
  ReplayBackend(std::vector<ReplayRecord> records, AgentRole role,
                bool chat_style_qa = false);

  GenerationRecord generate(const ChatPrompt& prompt,
                            const GenerationParams& params) override;
  BackendKind kind() const override { return BackendKind::replay; }
  AgentRole role() const override { return role_; }
  bool chat_style_qa() const override { return chat_style_qa_; }

  std::size_t cursor() const;

 private:
  std::vector<ReplayRecord> records_;
  AgentRole role_;
  bool chat_style_qa_;
  mutable std::mutex mutex_;
  std::size_t cursor_ = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_multiplier = 2.0;
};

struct EndpointConfig {
  std::string base_url;    // scheme://host[:port][/prefix]
  std::string model;
  std::string api_key_env = "REFINERY_API_KEY";
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  int max_in_flight = 4;
  bool chat_style_qa = false;
};

/// Wire client for chat-completion endpoints. Retries transport errors and
/// 5xx/429 with exponential backoff; at most max_in_flight requests run
/// concurrently. Completion order is not issue order.
class EndpointBackend final : public AgentBackend {
 public:
  EndpointBackend(EndpointConfig config, AgentRole role);
  ~EndpointBackend() override;

  GenerationRecord generate(const ChatPrompt& prompt,
                            const GenerationParams& params) override;
  BackendKind kind() const override { return BackendKind::endpoint; }
  AgentRole role() const override { return role_; }
  bool chat_style_qa() const override { return config_.chat_style_qa; }

  /// The JSON request body for a prompt, exactly as sent on the wire.
  std::string wire_body(const ChatPrompt& prompt,
                        const GenerationParams& params) const;

 private:
  struct InFlightGate;

  EndpointConfig config_;
  AgentRole role_;
  std::string host_part_;   // scheme://host:port
  std::string path_prefix_; // optional path before /v1/chat/completions
  std::unique_ptr<InFlightGate> gate_;
  std::once_flag dropped_params_warned_;
};

}  // namespace refinery
