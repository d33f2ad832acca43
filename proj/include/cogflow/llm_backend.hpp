#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cogflow/polarize.hpp"

namespace cogflow {

struct LlmBackendOptions {
  /// Full chat-completion URL, e.g. "http://localhost:8000/v1/chat/completions".
  std::string endpoint;
  std::string model;
  std::optional<std::string> api_key;
  std::chrono::milliseconds timeout{30'000};
  int retries = 3;
  /// Delay before the first retry; doubles on each subsequent one.
  std::chrono::milliseconds backoff{500};
};

/// Reads the bearer token from COGFLOW_LLM_KEY, if set.
std::optional<std::string> llm_key_from_environment();

/// The system instruction sent for one polarization step.
std::string polarization_instruction(const DimensionSpec& dimension, Pole pole);

/// {model, messages:[system instruction, user prompt], temperature: 0}
nlohmann::json chat_request_body(std::string_view model, const DimensionSpec& dimension, Pole pole,
                                  std::string_view prompt);

/// Extracts choices[0].message.content (whitespace-trimmed). Throws a
/// retriable BackendError on malformed payloads.
std::string parse_chat_response(std::string_view body);

/// Polarization through an OpenAI-compatible chat-completion endpoint.
class LlmBackend final : public PolarizerBackend {
 public:
  explicit LlmBackend(LlmBackendOptions options);

  std::string polarize(std::string_view prompt, const DimensionSpec& dimension, Pole pole) override;
  std::string backend_id() const override;

  const LlmBackendOptions& options() const noexcept { return options_; }

 private:
  std::string request_once(const std::string& body);

  LlmBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace cogflow
