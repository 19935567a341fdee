#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/common/clock.hpp"
#include "feedguard/filter/filter.hpp"
#include "feedguard/graph/ranking.hpp"
#include "feedguard/llm/gateway.hpp"

namespace feedguard::needs {

using nlohmann::json;

enum class Strategy {
  /// Walks the user through their five-band preference profile.
  ProfileExplanation,
  /// Walks the user through recently filtered items and why they were filtered.
  RecordExplanation,
};

std::string_view to_string(Strategy s);
/// Accepts "profile" / "records". Throws Error(InvalidArgument).
Strategy strategy_from_string(std::string_view s);

enum class Speaker { Agent, User };
std::string_view to_string(Speaker s);

struct Message {
  Speaker speaker = Speaker::Agent;
  std::string text;
  Timestamp timestamp = 0;
  friend bool operator==(const Message&, const Message&) = default;
};

/// What the opening message was rendered from.
struct ContextSnapshot {
  std::uint64_t profile_version = 0;
  /// Sequence numbers of the first and last record in the window (0 when empty).
  std::uint64_t first_record_seq = 0;
  std::uint64_t last_record_seq = 0;
  std::size_t record_count = 0;
  friend bool operator==(const ContextSnapshot&, const ContextSnapshot&) = default;
};

/// A filter record together with its position in the log.
struct RecordRef {
  std::uint64_t seq = 0;
  filter::FilterRecord record;
  friend bool operator==(const RecordRef&, const RecordRef&) = default;
};

/// Maximum number of records a Strategy 2 opening explains.
inline constexpr std::size_t kRecordWindow = 50;

struct ConversationSession {
  std::string id;
  Strategy strategy = Strategy::ProfileExplanation;
  std::vector<Message> messages;
  ContextSnapshot snapshot;
  /// Background given to the model on every reply; fixed at opening.
  std::string context;
  bool open = true;

  /// Completed user/agent rounds after the opening.
  [[nodiscard]] std::size_t rounds() const noexcept { return messages.empty() ? 0 : (messages.size() - 1) / 2; }

  [[nodiscard]] json to_json() const;
  static ConversationSession from_json(const json& j);
  friend bool operator==(const ConversationSession&, const ConversationSession&) = default;
};

/// One user message and the agent's answer to it.
struct Round {
  std::string session_id;
  /// 1-based index of the round within its session.
  std::size_t index = 0;
  std::string user_message;
  std::string agent_message;
};

/// Lists every band with its labels, or says that no profile exists yet.
std::string render_profile(const graph::PreferenceProfile& profile);

/// Opens a session whose first message renders the snapshot. Records are
/// given oldest first; only the newest kRecordWindow are used. An empty
/// profile or record list still opens a session, and the opening says so.
ConversationSession open_session(std::string id, Strategy strategy, const graph::PreferenceProfile& profile,
                                 std::uint64_t profile_version, const std::vector<RecordRef>& records,
                                 Timestamp now);

/// The fixed reply used when the model cannot answer.
std::string_view apology_text();

struct Reply {
  std::string text;
  /// True when the model failed and apology_text() was used.
  bool apology = false;
};

/// Produces the agent's answer to `user_message` without modifying the
/// session. Throws Error(SessionClosed) / Error(InvalidArgument).
Reply compute_reply(const ConversationSession& session, std::string_view user_message,
                    const graph::PreferenceProfile& current_profile, llm::Gateway& gateway);

/// Appends the round to the session and returns it.
Round append_round(ConversationSession& session, std::string user_message, std::string agent_message,
                   Timestamp user_time, Timestamp agent_time);

using RoundSink = std::function<void(const Round&)>;

/// compute_reply + append_round, then hands the round to `sink` exactly once.
Round respond(ConversationSession& session, std::string user_message, const graph::PreferenceProfile& current_profile,
              llm::Gateway& gateway, Clock& clock, const RoundSink& sink);

}  // namespace feedguard::needs
