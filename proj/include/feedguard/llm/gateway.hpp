#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "feedguard/llm/backend.hpp"
#include "feedguard/llm/rate_limiter.hpp"
#include "feedguard/llm/schema.hpp"
#include "feedguard/llm/types.hpp"

namespace feedguard::llm {

struct GatewayOptions {
  /// Total model attempts for a structured completion (first try included).
  int structured_attempts = 3;
  /// Extra tries after a transport failure before giving up.
  int transport_retries = 3;
  std::chrono::milliseconds retry_backoff{250};
  double requests_per_second = 0.0;
};

/// Uniform entry point to a chat/embedding backend.
///
/// Thread-safe: the only shared mutable state is the rate limiter and the call
/// counters. Structured completions run at temperature 0, append the schema's
/// format instruction to the last user message, and on unusable output echo
/// the reply back with a correction message until the attempt budget is spent.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {},
                   SchemaRegistry schemas = SchemaRegistry::builtin());

  ChatResponse complete(const ChatRequest& request);

  /// `extra_check` runs after the schema check, for constraints only the
  /// caller knows (e.g. an index bound).
  ChatResponse complete_structured(ChatRequest request, std::string_view schema_ref,
                                   const PayloadCheck& extra_check = {});

  /// Unit-norm embedding. Throws Error(EmptyText) for blank input.
  Embedding embed(std::string_view text);

  [[nodiscard]] std::string backend_id() const { return backend_->id(); }
  [[nodiscard]] const SchemaRegistry& schemas() const noexcept { return schemas_; }
  [[nodiscard]] const GatewayOptions& options() const noexcept { return options_; }

  /// Number of backend chat calls issued, retries included.
  [[nodiscard]] std::uint64_t chat_calls() const noexcept { return chat_calls_.load(); }
  [[nodiscard]] std::uint64_t embed_calls() const noexcept { return embed_calls_.load(); }

 private:
  std::string call_chat(const ChatRequest& request);

  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions options_;
  SchemaRegistry schemas_;
  RateLimiter limiter_;
  std::atomic<std::uint64_t> chat_calls_{0};
  std::atomic<std::uint64_t> embed_calls_{0};
};

/// System instruction + one user turn, routed by `script_key`.
ChatRequest single_turn(std::string_view script_key, std::string user_text,
                        std::int64_t seed = 0);

/// The fixed system instruction every prompt starts with.
ChatMessage system_message();

}  // namespace feedguard::llm
