#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace feedguard::llm {

using json = nlohmann::json;

enum class Role { System, User, Assistant };

std::string_view to_string(Role role) noexcept;

struct ChatMessage {
  Role role = Role::User;
  std::string text;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  /// Name of the expected response schema; set only by structured completions.
  std::optional<std::string> schema_ref;
  double temperature = 0.0;
  std::int64_t seed = 0;
  /// Routing key for the scripted backend, e.g. "perceive/v1".
  std::optional<std::string> script_key;
};

/// Throws Error(InvalidArgument) when the request breaks the message or
/// temperature invariants.
void validate(const ChatRequest& request);

struct ChatResponse {
  std::string text;
  std::optional<json> parsed;
  int attempts = 1;
  std::string backend_id;
};

/// Unit-norm embedding. Dimension is fixed per backend.
struct Embedding {
  std::vector<double> values;

  [[nodiscard]] std::size_t dimension() const noexcept { return values.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// Cosine similarity; 0 for mismatched or zero vectors.
double cosine(const Embedding& a, const Embedding& b);

/// Scales to unit L2 norm. Throws std::invalid_argument on a zero vector.
Embedding normalized(std::vector<double> values);

}  // namespace feedguard::llm
