#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feedguard/llm/types.hpp"

namespace feedguard::llm::stub {

/// Built-in reply generators a stub script can name in its "generator" field.
/// Each is a pure function of the request.
///
///   uniform_choice  Prediction: index drawn from the request digest (seed
///                   included) over the "[i]" candidate lines.
///   title_keywords  FeatureList: content words of the first quoted string.
///   keyword_topics  TopicList: content words of the first quoted string.
///   topic_overlap   FilterVerdict: true iff the two earlier topic replies share
///                   a topic word.
///   echo_reasons    Free text naming the quoted title.
///   echo_need       FilteringNeed: the user's message when it says "do not want"
///                   / "don't want", otherwise null.
///   no_merge        MergeDecision: never merge.
///   no_relation     RuleRelevance: unrelated to every rule.
std::optional<std::string> generate(std::string_view name, const ChatRequest& request);

/// Lowercase content words (length >= 4, stopwords removed), in order of first
/// appearance.
std::vector<std::string> content_words(std::string_view text);

/// The first "..."-quoted substring, if any.
std::optional<std::string> first_quoted(std::string_view text);

/// Digest-derived 64-bit value used by generators that need a random draw.
std::uint64_t request_hash(const ChatRequest& request);

}  // namespace feedguard::llm::stub
