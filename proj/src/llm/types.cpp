#include "feedguard/llm/types.hpp"

#include <cmath>
#include <stdexcept>

#include "feedguard/common/error.hpp"

namespace feedguard::llm {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

void validate(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw Error(Errc::InvalidArgument, "chat request has no messages");
  }
  if (request.messages.front().role == Role::Assistant) {
    throw Error(Errc::InvalidArgument, "chat request must open with a system or user message");
  }
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw Error(Errc::InvalidArgument, "temperature must be in [0, 2]");
  }
  if (request.schema_ref && request.temperature != 0.0) {
    throw Error(Errc::InvalidArgument, "structured requests run at temperature 0");
  }
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size() || a.values.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Embedding normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (sq == 0.0 || !std::isfinite(sq)) {
    throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : values) v *= inv;
  return Embedding{std::move(values)};
}

}  // namespace feedguard::llm
