#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "feedguard/filter/rules.hpp"
#include "feedguard/llm/gateway.hpp"
#include "feedguard/profile/types.hpp"

namespace feedguard::filter {

using profile::Item;

struct FilterDecision {
  std::string item_id;
  std::string rule_id;
  std::uint64_t rule_version = 0;
  bool matched = false;
  std::vector<std::string> item_topics;
  std::vector<std::string> rule_topics;
  std::string rationale;
  Timestamp timestamp = 0;

  [[nodiscard]] json to_json() const;
  static FilterDecision from_json(const json& j);

  friend bool operator==(const FilterDecision&, const FilterDecision&) = default;
};

/// One filtered item of one feed evaluation.
struct FilterRecord {
  std::string item_id;
  std::string item_title;
  std::string matched_rule_id;
  FilterDecision decision;
  /// "YYYY-MM-DD" of the evaluation.
  std::string day;

  [[nodiscard]] json to_json() const;
  static FilterRecord from_json(const json& j);

  friend bool operator==(const FilterRecord&, const FilterRecord&) = default;
};

/// Items evaluated under each (rule id, day).
using ProcessedCounts = std::map<std::pair<std::string, std::string>, std::uint64_t>;

struct FilterStats {
  std::string rule_id;
  std::string day;
  std::uint64_t processed = 0;
  std::uint64_t filtered = 0;
  /// filtered / processed; absent when nothing was processed.
  std::optional<double> efficiency;

  friend bool operator==(const FilterStats&, const FilterStats&) = default;
};

/// Runs the three-turn topic/topic/verdict protocol and caches decisions by
/// (item id, rule id, rule version). Safe to call from several threads.
class RuleMatcher {
 public:
  explicit RuleMatcher(llm::Gateway& gateway);

  /// Throws Error(InactiveRule) for an inactive rule and
  /// Error(DecisionUnavailable) when the model calls fail. A fresh decision is
  /// stamped with `now`; a cached one keeps its original timestamp.
  FilterDecision match_rule(const Item& item, const FilterRule& rule, Timestamp now);

  [[nodiscard]] std::size_t cache_size() const;
  [[nodiscard]] std::uint64_t cache_hits() const;

 private:
  using Key = std::tuple<std::string, std::string, std::uint64_t>;

  FilterDecision evaluate(const Item& item, const FilterRule& rule, Timestamp now);

  llm::Gateway& gateway_;
  mutable std::mutex mutex_;
  std::map<Key, FilterDecision> cache_;
  std::uint64_t hits_ = 0;
};

struct FilterOptions {
  /// Items evaluated concurrently; 1 keeps everything on the calling thread.
  std::size_t parallelism = 1;
};

struct FeedResult {
  std::vector<Item> kept;
  std::vector<FilterRecord> records;
  ProcessedCounts processed;
  /// (item id, rule id) pairs with no decision; the item was kept for them.
  std::vector<std::pair<std::string, std::string>> unavailable;
};

/// Evaluates each item against the active rules in creation order, stopping at
/// the first match. Undecidable pairs count as non-matches. Inactive rules in
/// `rules` are ignored.
FeedResult filter_feed(const std::vector<Item>& items, const std::vector<FilterRule>& rules,
                       RuleMatcher& matcher, Timestamp now, const FilterOptions& options = {});

/// n / N for one rule-day, absent when N = 0.
std::optional<double> filtering_efficiency(const std::vector<FilterRecord>& records,
                                           const ProcessedCounts& processed, const std::string& rule_id,
                                           const std::string& day);

/// Per (rule, day) statistics over every rule-day that has processed items or
/// records, ordered by rule id then day.
std::vector<FilterStats> compute_stats(const std::vector<FilterRecord>& records, const ProcessedCounts& processed);

}  // namespace feedguard::filter
