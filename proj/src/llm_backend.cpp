#include "cogflow/llm_backend.hpp"

#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "cogflow/errors.hpp"

namespace cogflow {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// "http://host:8080/v1/chat" -> {"http://host:8080", "/v1/chat"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("LLM endpoint '" + url + "' has no scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("LLM endpoint scheme must be http or https, got '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::optional<std::string> llm_key_from_environment() {
  if (const char* key = std::getenv("COGFLOW_LLM_KEY"); key && *key) return std::string(key);
  return std::nullopt;
}

std::string polarization_instruction(const DimensionSpec& dimension, Pole pole) {
  const bool enhance = pole == Pole::high;
  const std::string& description = enhance ? dimension.high_pole_text : dimension.low_pole_text;
  std::string text = "Rewrite the prompt to ";
  text += enhance ? "enhance" : "attenuate";
  text += " the " + dimension.name;
  if (!description.empty()) text += " (" + description + ")";
  text += " while preserving the core subject. Reply with the rewritten prompt only.";
  return text;
}

nlohmann::json chat_request_body(std::string_view model, const DimensionSpec& dimension, Pole pole,
                                  std::string_view prompt) {
  return {
      {"model", model},
      {"messages",
       nlohmann::json::array({
           {{"role", "system"}, {"content", polarization_instruction(dimension, pole)}},
           {{"role", "user"}, {"content", prompt}},
       })},
      {"temperature", 0},
  };
}

std::string parse_chat_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError("chat completion response is not JSON", true, e.what());
  }
  const auto* content = [&]() -> const nlohmann::json* {
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) return nullptr;
    const auto& choice = j["choices"][0];
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) return nullptr;
    const auto& message = choice["message"];
    if (!message.contains("content") || !message["content"].is_string()) return nullptr;
    return &message["content"];
  }();
  if (content == nullptr) {
    throw BackendError("chat completion response lacks choices[0].message.content", true,
                       std::string(body.substr(0, 512)));
  }
  auto text = trim(content->get<std::string>());
  if (text.empty()) throw BackendError("chat completion returned an empty rewrite", true);
  return text;
}

LlmBackend::LlmBackend(LlmBackendOptions options) : options_(std::move(options)) {
  if (options_.model.empty()) throw ConfigError("LLM backend needs a model name");
  std::tie(scheme_host_port_, path_) = split_url(options_.endpoint);
}

std::string LlmBackend::backend_id() const { return "llm:" + options_.model + "@" + options_.endpoint; }

std::string LlmBackend::request_once(const std::string& body) {
  httplib::Client client(scheme_host_port_);
  if (!client.is_valid()) throw BackendError("invalid LLM endpoint " + options_.endpoint, false);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (options_.api_key) headers.emplace("Authorization", "Bearer " + *options_.api_key);

  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    throw BackendError("request to " + options_.endpoint + " failed", true, httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw BackendError("LLM endpoint returned HTTP " + std::to_string(res->status), true, res->body);
  }
  if (res->status != 200) {
    throw BackendError("LLM endpoint returned HTTP " + std::to_string(res->status), false, res->body);
  }
  return parse_chat_response(res->body);
}

std::string LlmBackend::polarize(std::string_view prompt, const DimensionSpec& dimension, Pole pole) {
  const auto body = chat_request_body(options_.model, dimension, pole, prompt).dump();
  auto delay = options_.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return request_once(body);
    } catch (const BackendError& e) {
      if (!e.retriable() || attempt >= options_.retries) throw;
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

}  // namespace cogflow
