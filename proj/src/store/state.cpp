#include "feedguard/store/state.hpp"

#include <variant>

#include <fmt/format.h>

#include "feedguard/common/error.hpp"

namespace feedguard::store {

namespace {

struct ImpressionIngested {
  profile::Impression impression;
  profile::IngestOutcome outcome;
};
struct FeedFiltered {
  std::vector<filter::FilterRecord> records;
  filter::ProcessedCounts processed;
};
struct RuleCreated {
  std::string text;
  bool active = true;
};
struct RuleUpdated {
  std::string rule_id;
  std::string text;
};
struct RuleActivation {
  std::string rule_id;
  bool active = true;
};
struct RuleDeleted {
  std::string rule_id;
};
struct SessionOpened {
  needs::ConversationSession session;
};
struct ConversationRound {
  std::string session_id;
  std::string user_text;
  Timestamp user_time = 0;
  std::string agent_text;
  Timestamp agent_time = 0;
  std::optional<actions::ManagementAction> action;
};
struct SessionClosed {
  std::string session_id;
};
struct ActionResolved {
  std::string action_id;
  bool confirmed = false;
  std::string edited_text;
};

using Decoded = std::variant<ImpressionIngested, FeedFiltered, RuleCreated, RuleUpdated, RuleActivation, RuleDeleted,
                             SessionOpened, ConversationRound, SessionClosed, ActionResolved>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

filter::ProcessedCounts processed_from_json(const json& j) {
  filter::ProcessedCounts out;
  for (const auto& row : j) {
    out[{row.at("rule_id").get<std::string>(), row.at("day").get<std::string>()}] += row.at("count").get<std::uint64_t>();
  }
  return out;
}

json processed_to_json(const filter::ProcessedCounts& counts) {
  json out = json::array();
  for (const auto& [key, count] : counts) out.push_back({{"rule_id", key.first}, {"day", key.second}, {"count", count}});
  return out;
}

Decoded decode_payload(std::string_view kind, const json& p) {
  if (!p.is_object()) throw Error(Errc::SchemaInvalid, fmt::format("{} payload must be an object", kind));
  if (kind == kinds::kImpressionIngested) {
    ImpressionIngested e{profile::impression_from_json(p.at("impression")),
                         profile::IngestOutcome::from_json(p.at("outcome"))};
    if (e.impression.impression_id != e.outcome.impression_id) {
      throw Error(Errc::SchemaInvalid, "impression and outcome ids differ");
    }
    return e;
  }
  if (kind == kinds::kFeedFiltered) {
    FeedFiltered e;
    p.at("feed_size").get<std::size_t>();
    p.at("kept").get<std::vector<std::string>>();
    p.at("unavailable").get<std::vector<std::vector<std::string>>>();
    for (const auto& r : p.at("records")) e.records.push_back(filter::FilterRecord::from_json(r));
    e.processed = processed_from_json(p.at("processed"));
    return e;
  }
  if (kind == kinds::kRuleCreated) return RuleCreated{p.at("text").get<std::string>(), p.at("active").get<bool>()};
  if (kind == kinds::kRuleUpdated) {
    return RuleUpdated{p.at("rule_id").get<std::string>(), p.at("text").get<std::string>()};
  }
  if (kind == kinds::kRuleActivation) {
    return RuleActivation{p.at("rule_id").get<std::string>(), p.at("active").get<bool>()};
  }
  if (kind == kinds::kRuleDeleted) return RuleDeleted{p.at("rule_id").get<std::string>()};
  if (kind == kinds::kSessionOpened) return SessionOpened{needs::ConversationSession::from_json(p.at("session"))};
  if (kind == kinds::kConversationRound) {
    ConversationRound e;
    e.session_id = p.at("session_id").get<std::string>();
    e.user_text = p.at("user_text").get<std::string>();
    e.user_time = p.at("user_time").get<Timestamp>();
    e.agent_text = p.at("agent_text").get<std::string>();
    e.agent_time = p.at("agent_time").get<Timestamp>();
    p.at("apology").get<bool>();
    const auto& need = p.at("need");
    if (!need.is_null()) {
      need.at("text").get<std::string>();
      need.at("session_id").get<std::string>();
      need.at("round").get<std::size_t>();
    }
    if (!p.at("action").is_null()) e.action = actions::ManagementAction::from_json(p["action"]);
    return e;
  }
  if (kind == kinds::kSessionClosed) return SessionClosed{p.at("session_id").get<std::string>()};
  if (kind == kinds::kActionResolved) {
    return ActionResolved{p.at("action_id").get<std::string>(), p.at("confirmed").get<bool>(),
                          p.at("edited_text").get<std::string>()};
  }
  throw Error(Errc::SchemaInvalid, fmt::format("unknown event kind \"{}\"", kind));
}

Decoded decode(std::string_view kind, const json& payload) {
  try {
    return decode_payload(kind, payload);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaInvalid, fmt::format("bad {} payload: {}", kind, e.what()));
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaInvalid) throw;
    throw Error(Errc::SchemaInvalid, fmt::format("bad {} payload: {}", kind, e.what()));
  }
}

needs::ConversationSession& session_of(AppState& state, const std::string& id) {
  auto it = state.sessions.find(id);
  if (it == state.sessions.end()) throw Error(Errc::NotFound, "no conversation " + id);
  return it->second;
}

}  // namespace

json Event::to_json() const {
  return {{"seq", seq}, {"kind", kind}, {"timestamp", timestamp}, {"payload", payload}};
}

Event Event::from_json(const json& j) {
  Event e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = j.at("kind").get<std::string>();
    e.timestamp = j.at("timestamp").get<Timestamp>();
    e.payload = j.at("payload");
  } catch (const json::exception& ex) {
    throw Error(Errc::SchemaInvalid, std::string("bad event envelope: ") + ex.what());
  }
  validate_event(e.kind, e.payload);
  return e;
}

void validate_event(std::string_view kind, const json& payload) { decode(kind, payload); }

json impression_payload(const profile::Impression& impression, const profile::IngestOutcome& outcome) {
  return {{"impression", profile::impression_to_json(impression)}, {"outcome", outcome.to_json()}};
}

json feed_payload(std::size_t feed_size, const filter::FeedResult& result) {
  json kept = json::array();
  for (const auto& item : result.kept) kept.push_back(item.id);
  json records = json::array();
  for (const auto& r : result.records) records.push_back(r.to_json());
  json unavailable = json::array();
  for (const auto& [item, rule] : result.unavailable) unavailable.push_back({item, rule});
  return {{"feed_size", feed_size},
          {"kept", std::move(kept)},
          {"records", std::move(records)},
          {"processed", processed_to_json(result.processed)},
          {"unavailable", std::move(unavailable)}};
}

json round_payload(const std::string& session_id, const std::string& user_text, Timestamp user_time,
                   const std::string& agent_text, Timestamp agent_time, bool apology,
                   const std::optional<actions::FilteringNeed>& need,
                   const std::optional<actions::ManagementAction>& action) {
  json need_json = need ? json{{"text", need->text}, {"session_id", need->session_id}, {"round", need->round}}
                        : json(nullptr);
  return {{"session_id", session_id},
          {"user_text", user_text},
          {"user_time", user_time},
          {"agent_text", agent_text},
          {"agent_time", agent_time},
          {"apology", apology},
          {"need", std::move(need_json)},
          {"action", action ? action->to_json() : json(nullptr)}};
}

void apply_event(AppState& state, const Event& event) {
  if (event.seq != state.last_seq + 1) {
    throw Error(Errc::CorruptLog, fmt::format("event seq {} does not follow {}", event.seq, state.last_seq));
  }
  auto decoded = decode(event.kind, event.payload);
  std::visit(
      Overloaded{
          [&](ImpressionIngested& e) {
            if (state.profile.ingested.count(e.outcome.impression_id)) {
              throw Error(Errc::DuplicateImpression, "impression " + e.outcome.impression_id + " already ingested");
            }
            profile::apply_outcome(state.profile, e.outcome);
          },
          [&](FeedFiltered& e) {
            for (auto& r : e.records) state.records.push_back({event.seq, std::move(r)});
            for (const auto& [key, count] : e.processed) state.processed[key] += count;
            ++state.feeds_filtered;
          },
          [&](RuleCreated& e) { state.rules.add(std::move(e.text), event.timestamp, e.active); },
          [&](RuleUpdated& e) { state.rules.update_text(e.rule_id, std::move(e.text)); },
          [&](RuleActivation& e) { state.rules.set_active(e.rule_id, e.active); },
          [&](RuleDeleted& e) { state.rules.remove(e.rule_id); },
          [&](SessionOpened& e) {
            const auto expected = "s" + std::to_string(state.next_session);
            if (e.session.id != expected) {
              throw Error(Errc::CorruptLog, fmt::format("session id {} where {} was due", e.session.id, expected));
            }
            state.sessions.emplace(e.session.id, std::move(e.session));
            ++state.next_session;
          },
          [&](ConversationRound& e) {
            auto& session = session_of(state, e.session_id);
            if (e.action) {
              const auto expected = "a" + std::to_string(state.next_action);
              if (e.action->id != expected) {
                throw Error(Errc::CorruptLog, fmt::format("action id {} where {} was due", e.action->id, expected));
              }
            }
            needs::append_round(session, std::move(e.user_text), std::move(e.agent_text), e.user_time, e.agent_time);
            ++state.rounds_forwarded;
            if (e.action) {
              state.actions.emplace(e.action->id, std::move(*e.action));
              ++state.next_action;
            }
          },
          [&](SessionClosed& e) { session_of(state, e.session_id).open = false; },
          [&](ActionResolved& e) {
            auto it = state.actions.find(e.action_id);
            if (it == state.actions.end()) throw Error(Errc::NotFound, "no action " + e.action_id);
            actions::apply_action(state.rules, it->second, e.edited_text, e.confirmed, event.timestamp);
          },
      },
      decoded);
  state.last_seq = event.seq;
}

json AppState::to_json() const {
  json actions_json = json::array();
  for (const auto& [id, a] : actions) actions_json.push_back(a.to_json());
  json sessions_json = json::array();
  for (const auto& [id, s] : sessions) sessions_json.push_back(s.to_json());
  json records_json = json::array();
  for (const auto& r : records) records_json.push_back({{"seq", r.seq}, {"record", r.record.to_json()}});
  return {{"profile", profile.to_json()},
          {"rules", rules.to_json()},
          {"actions", std::move(actions_json)},
          {"next_action", next_action},
          {"sessions", std::move(sessions_json)},
          {"next_session", next_session},
          {"records", std::move(records_json)},
          {"processed", processed_to_json(processed)},
          {"feeds_filtered", feeds_filtered},
          {"rounds_forwarded", rounds_forwarded},
          {"last_seq", last_seq}};
}

AppState AppState::from_json(const json& j) {
  AppState s;
  s.profile = profile::ProfileState::from_json(j.at("profile"));
  s.rules = filter::RuleSet::from_json(j.at("rules"));
  for (const auto& a : j.at("actions")) {
    auto action = actions::ManagementAction::from_json(a);
    s.actions.emplace(action.id, std::move(action));
  }
  s.next_action = j.at("next_action").get<std::uint64_t>();
  for (const auto& c : j.at("sessions")) {
    auto session = needs::ConversationSession::from_json(c);
    s.sessions.emplace(session.id, std::move(session));
  }
  s.next_session = j.at("next_session").get<std::uint64_t>();
  for (const auto& r : j.at("records")) {
    s.records.push_back({r.at("seq").get<std::uint64_t>(), filter::FilterRecord::from_json(r.at("record"))});
  }
  s.processed = processed_from_json(j.at("processed"));
  s.feeds_filtered = j.at("feeds_filtered").get<std::uint64_t>();
  s.rounds_forwarded = j.at("rounds_forwarded").get<std::uint64_t>();
  s.last_seq = j.at("last_seq").get<std::uint64_t>();
  return s;
}

}  // namespace feedguard::store
