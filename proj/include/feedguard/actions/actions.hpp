#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/filter/rules.hpp"
#include "feedguard/llm/gateway.hpp"
#include "feedguard/needs/conversation.hpp"

namespace feedguard::actions {

using nlohmann::json;

/// Something the user said they do not want to see, with where they said it.
struct FilteringNeed {
  std::string text;
  std::string session_id;
  std::size_t round = 0;
  friend bool operator==(const FilteringNeed&, const FilteringNeed&) = default;
};

enum class ActionKind { Add, Update };
enum class ActionStatus { Proposed, Confirmed, Rejected };

std::string_view to_string(ActionKind k);
std::string_view to_string(ActionStatus s);

/// A proposed change to the rule set awaiting the user's edit and confirmation.
struct ManagementAction {
  std::string id;
  ActionKind kind = ActionKind::Add;
  /// Set for Update: the rule and the version it had when proposed.
  std::optional<std::string> target_rule_id;
  std::optional<std::uint64_t> target_version;
  std::string proposed_text;
  ActionStatus status = ActionStatus::Proposed;
  FilteringNeed need;
  /// The active rule this need repeats word for word, if any.
  std::optional<std::string> duplicate_of;
  Timestamp proposed_at = 0;
  /// Text the user confirmed, and the rule it produced or changed.
  std::optional<std::string> final_text;
  std::optional<std::string> result_rule_id;
  std::optional<Timestamp> resolved_at;

  [[nodiscard]] json to_json() const;
  static ManagementAction from_json(const json& j);
  friend bool operator==(const ManagementAction&, const ManagementAction&) = default;
};

/// Asks the model whether the round expresses a filtering need. Model
/// failures are logged and treated as "no need".
std::optional<FilteringNeed> detect_need(const needs::Round& round, llm::Gateway& gateway);

/// Most rules shown to the model when judging relevance; the newest are kept.
inline constexpr std::size_t kMaxRulesInPrompt = 50;

/// Turns a need into an Add or an Update. No model call is made when there
/// are no rules or when the need repeats an active rule verbatim. The returned
/// action has no id yet. Gateway failures propagate.
ManagementAction propose_action(const FilteringNeed& need, const std::vector<filter::FilterRule>& rules,
                                llm::Gateway& gateway, Timestamp now);

/// Resolves a proposed action. Confirmed Add creates an active rule with
/// `edited_text`; confirmed Update rewrites the target rule. Unconfirmed
/// leaves the rules alone and marks the action rejected.
/// Throws Error(StaleAction) if the action is no longer proposed or its
/// target was deleted or edited since, Error(InvalidArgument) for blank text.
void apply_action(filter::RuleSet& rules, ManagementAction& action, std::string_view edited_text, bool confirmed,
                  Timestamp now);

/// confirmed / proposed over every action ever proposed; absent when none.
std::optional<double> acceptance_rate(const std::vector<ManagementAction>& actions);

}  // namespace feedguard::actions
