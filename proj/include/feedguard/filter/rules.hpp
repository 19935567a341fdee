#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/common/clock.hpp"

namespace feedguard::filter {

using nlohmann::json;

/// A user-authored natural-language filtering rule.
struct FilterRule {
  std::string id;
  std::string text;
  bool active = true;
  /// Always 1 + history.size().
  std::uint64_t version = 1;
  Timestamp created_at = 0;
  /// Creation sequence number; breaks created_at ties.
  std::uint64_t ordinal = 0;
  /// Prior texts, oldest first.
  std::vector<std::string> history;

  [[nodiscard]] json to_json() const;
  static FilterRule from_json(const json& j);

  friend bool operator==(const FilterRule&, const FilterRule&) = default;
};

/// The single owner of a user's rules. Ids are "r1", "r2", ... in creation order.
class RuleSet {
 public:
  /// Throws Error(InvalidArgument) for blank text.
  const FilterRule& add(std::string text, Timestamp now, bool active = true);
  /// Replaces the text, bumps the version and keeps the old text in history.
  /// Throws Error(NotFound) / Error(InvalidArgument).
  const FilterRule& update_text(const std::string& id, std::string text);
  const FilterRule& set_active(const std::string& id, bool active);
  void remove(const std::string& id);

  [[nodiscard]] const FilterRule* find(const std::string& id) const;
  /// Throws Error(NotFound).
  [[nodiscard]] const FilterRule& get(const std::string& id) const;
  /// Every rule in creation order.
  [[nodiscard]] std::vector<FilterRule> all() const;
  /// Active rules in creation order.
  [[nodiscard]] std::vector<FilterRule> active() const;
  [[nodiscard]] std::size_t size() const noexcept { return rules_.size(); }
  [[nodiscard]] std::uint64_t next_ordinal() const noexcept { return next_ordinal_; }

  [[nodiscard]] json to_json() const;
  static RuleSet from_json(const json& j);

  friend bool operator==(const RuleSet&, const RuleSet&) = default;

 private:
  FilterRule& mutable_rule(const std::string& id);

  std::map<std::string, FilterRule> rules_;
  std::uint64_t next_ordinal_ = 1;
};

/// Sorts by (created_at, ordinal).
void sort_by_creation(std::vector<FilterRule>& rules);

}  // namespace feedguard::filter
