#pragma once

#include <chrono>
#include <string>

#include "feedguard/llm/backend.hpp"

namespace feedguard::llm {

struct HttpBackendConfig {
  /// e.g. "https://api.openai.com/v1" or "http://127.0.0.1:11434/v1"
  std::string base_url;
  std::string model;
  std::string embedding_model;
  /// Name of the environment variable holding the bearer token. Empty or unset
  /// means no Authorization header.
  std::string api_key_env = "FEEDGUARD_API_KEY";
  std::chrono::seconds timeout{60};
};

/// Speaks the chat-completions / embeddings JSON protocol over HTTP(S).
/// Network errors and non-2xx replies surface as Error(Transport).
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  [[nodiscard]] std::string id() const override { return "http:" + config_.model; }
  std::string chat(const ChatRequest& request) override;
  std::vector<double> embed(std::string_view text) override;

  /// Request body sent for a chat request; exposed for tests.
  [[nodiscard]] json chat_body(const ChatRequest& request) const;

 private:
  json post(const std::string& path, const json& body);

  HttpBackendConfig config_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. /v1
};

}  // namespace feedguard::llm
