#pragma once

#include <map>
#include <string>
#include <string_view>

namespace feedguard::llm {

/// Prompt template by versioned name, e.g. "v1/perceive". Templates live under
/// prompts/ and are compiled into the binary. Throws Error(NotFound).
const std::string& prompt_template(std::string_view key);

/// Script keys used to route requests in the scripted backend. Each pipeline
/// stage has its own key so scripts can target it.
namespace keys {
inline constexpr std::string_view kPerceive = "perceive/v1";
inline constexpr std::string_view kSummary = "summary/v1";
inline constexpr std::string_view kReflectMerge = "reflect-merge/v1";
inline constexpr std::string_view kFilterItemTopics = "filter-item-topics/v1";
inline constexpr std::string_view kFilterRuleTopics = "filter-rule-topics/v1";
inline constexpr std::string_view kFilterVerdict = "filter-verdict/v1";
inline constexpr std::string_view kNeedsReply = "needs-reply/v1";
inline constexpr std::string_view kDetectNeed = "detect-need/v1";
inline constexpr std::string_view kRuleRelevance = "rule-relevance/v1";
inline constexpr std::string_view kPredict = "predict/v1";
inline constexpr std::string_view kExtractFeatures = "extract-features/v1";
}  // namespace keys

namespace detail {
const std::map<std::string, std::string, std::less<>>& embedded_prompts();
}

}  // namespace feedguard::llm
