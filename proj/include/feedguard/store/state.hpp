#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/actions/actions.hpp"
#include "feedguard/filter/filter.hpp"
#include "feedguard/filter/rules.hpp"
#include "feedguard/needs/conversation.hpp"
#include "feedguard/profile/pipeline.hpp"

namespace feedguard::store {

using nlohmann::json;

/// Event kinds and their payloads. Every state change of the service is one
/// of these.
namespace kinds {
/// {"impression": Impression, "outcome": IngestOutcome}
inline constexpr std::string_view kImpressionIngested = "impression_ingested";
/// {"feed_size", "kept": [item id], "records": [FilterRecord],
///  "processed": [{"rule_id","day","count"}], "unavailable": [[item id, rule id]]}
inline constexpr std::string_view kFeedFiltered = "feed_filtered";
/// {"text", "active"}; id and creation time follow from the log.
inline constexpr std::string_view kRuleCreated = "rule_created";
/// {"rule_id", "text"}
inline constexpr std::string_view kRuleUpdated = "rule_updated";
/// {"rule_id", "active"}
inline constexpr std::string_view kRuleActivation = "rule_activation";
/// {"rule_id"}
inline constexpr std::string_view kRuleDeleted = "rule_deleted";
/// {"session": ConversationSession}
inline constexpr std::string_view kSessionOpened = "session_opened";
/// {"session_id", "user_text", "user_time", "agent_text", "agent_time",
///  "apology", "need": FilteringNeed|null, "action": ManagementAction|null}
inline constexpr std::string_view kConversationRound = "conversation_round";
/// {"session_id"}
inline constexpr std::string_view kSessionClosed = "session_closed";
/// {"action_id", "confirmed", "edited_text"}
inline constexpr std::string_view kActionResolved = "action_resolved";
}  // namespace kinds

struct Event {
  std::uint64_t seq = 0;
  std::string kind;
  Timestamp timestamp = 0;
  json payload;

  [[nodiscard]] json to_json() const;
  /// Throws Error(SchemaInvalid) when the envelope or payload is malformed.
  static Event from_json(const json& j);
  friend bool operator==(const Event&, const Event&) = default;
};

/// Throws Error(SchemaInvalid) if `payload` does not have the shape `kind`
/// requires, or if `kind` is unknown.
void validate_event(std::string_view kind, const json& payload);

/// Everything the service knows; rebuilt from the event log.
struct AppState {
  profile::ProfileState profile;
  filter::RuleSet rules;
  std::map<std::string, actions::ManagementAction> actions;
  std::uint64_t next_action = 1;
  std::map<std::string, needs::ConversationSession> sessions;
  std::uint64_t next_session = 1;
  /// Every filter record, in log order.
  std::vector<needs::RecordRef> records;
  filter::ProcessedCounts processed;
  std::uint64_t feeds_filtered = 0;
  /// Conversation rounds handed to need detection.
  std::uint64_t rounds_forwarded = 0;
  std::uint64_t last_seq = 0;

  [[nodiscard]] json to_json() const;
  static AppState from_json(const json& j);
  friend bool operator==(const AppState&, const AppState&) = default;
};

/// Applies one event. The event's seq must be last_seq + 1. Throws
/// Error(SchemaInvalid) for malformed payloads, Error(CorruptLog) for a seq
/// gap, and the domain error when the event cannot apply to this state.
void apply_event(AppState& state, const Event& event);

/// Payload builders used by the service and by tests.
json impression_payload(const profile::Impression& impression, const profile::IngestOutcome& outcome);
json feed_payload(std::size_t feed_size, const filter::FeedResult& result);
json round_payload(const std::string& session_id, const std::string& user_text, Timestamp user_time,
                   const std::string& agent_text, Timestamp agent_time, bool apology,
                   const std::optional<actions::FilteringNeed>& need,
                   const std::optional<actions::ManagementAction>& action);

}  // namespace feedguard::store
