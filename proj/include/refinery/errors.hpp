#pragma once

#include <stdexcept>
#include <string>

namespace refinery {

/// What went wrong inside a backend's generate() call. Each kind is a
/// distinct failure mode callers may want to branch on.
enum class BackendErrorKind {
  network,             // transport failure after all retry attempts
  http_status,         // non-success HTTP status (after retries when retryable)
  malformed_response,  // success status but body not in the expected shape
  no_rule_match,       // scripted backend: no matcher found in the prompt
  replay_mismatch,     // replay backend: prompt differs from the recorded one
  replay_exhausted,    // replay backend: no recorded outputs left
};

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, std::string message, int attempts = 1,
               int http_status = 0)
      : std::runtime_error(std::move(message)),
        kind_(kind),
        attempts_(attempts),
        http_status_(http_status) {}

  BackendErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  int http_status() const { return http_status_; }

 private:
  BackendErrorKind kind_;
  int attempts_;
  int http_status_;
};

/// File-level corpus problems: unreadable path, malformed JSON line, or a
/// schema violation in strict mode.
class CorpusError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Resuming a trace with a configuration that differs from its snapshot.
class ConfigMismatchError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A trace that cannot be replayed or resumed consistently.
class CorruptTraceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace refinery
