#pragma once

#include <string>
#include <string_view>

#include "feedguard/llm/types.hpp"

namespace feedguard::llm {

/// A chat-completion + embedding provider. Implementations throw
/// Error(Transport) for network failures and Error(NoScript) when a scripted
/// backend has nothing registered for a request.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  [[nodiscard]] virtual std::string id() const = 0;

  virtual std::string chat(const ChatRequest& request) = 0;

  /// `text` is already trimmed and non-empty. The result need not be
  /// normalized; the gateway normalizes it.
  virtual std::vector<double> embed(std::string_view text) = 0;
};

}  // namespace feedguard::llm
