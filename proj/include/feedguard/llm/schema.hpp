#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "feedguard/llm/types.hpp"

namespace feedguard::llm {

/// Names of the built-in response schemas.
namespace schemas {
inline constexpr std::string_view kTopicList = "TopicList";
inline constexpr std::string_view kFilterVerdict = "FilterVerdict";
inline constexpr std::string_view kFeatureList = "FeatureList";
inline constexpr std::string_view kMergeDecision = "MergeDecision";
inline constexpr std::string_view kFilteringNeed = "FilteringNeed";
inline constexpr std::string_view kRuleRelevance = "RuleRelevance";
inline constexpr std::string_view kPrediction = "Prediction";
}  // namespace schemas

/// Returns an error description, or nullopt when the payload is acceptable.
using PayloadCheck = std::function<std::optional<std::string>(const json&)>;

struct Schema {
  std::string name;
  /// Shape shown to the model in the format instruction.
  std::string format;
  PayloadCheck check;
};

class SchemaRegistry {
 public:
  /// Registry holding every built-in schema.
  static SchemaRegistry builtin();

  void add(Schema schema);
  [[nodiscard]] const Schema* find(std::string_view name) const;

 private:
  std::map<std::string, Schema, std::less<>> schemas_;
};

/// Extracts the JSON object from a model reply, tolerating code fences and
/// prose around it.
std::optional<json> extract_json_object(std::string_view text);

/// The instruction appended to structured prompts.
std::string format_instruction(const Schema& schema);

}  // namespace feedguard::llm
