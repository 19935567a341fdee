#include "feedguard/needs/conversation.hpp"

#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"

namespace feedguard::needs {

namespace {

std::string record_lines(const std::vector<RecordRef>& window) {
  std::vector<std::string> lines;
  lines.reserve(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto& r = window[i].record;
    lines.push_back(std::to_string(i + 1) + ". " + text::quote(r.item_title) + ", filtered by rule " +
                    r.matched_rule_id + ": " + r.decision.rationale);
  }
  return text::join(lines, "\n");
}

Speaker speaker_from_string(std::string_view s) {
  if (s == "agent") return Speaker::Agent;
  if (s == "user") return Speaker::User;
  throw Error(Errc::InvalidArgument, "unknown speaker " + std::string(s));
}

}  // namespace

std::string_view to_string(Strategy s) {
  return s == Strategy::ProfileExplanation ? "profile" : "records";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "profile") return Strategy::ProfileExplanation;
  if (s == "records") return Strategy::RecordExplanation;
  throw Error(Errc::InvalidArgument, "unknown strategy \"" + std::string(s) + "\"; use profile or records");
}

std::string_view to_string(Speaker s) { return s == Speaker::Agent ? "agent" : "user"; }

json ConversationSession::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"speaker", to_string(m.speaker)}, {"text", m.text}, {"timestamp", m.timestamp}});
  }
  return {{"id", id},
          {"strategy", to_string(strategy)},
          {"messages", std::move(msgs)},
          {"snapshot",
           {{"profile_version", snapshot.profile_version},
            {"first_record_seq", snapshot.first_record_seq},
            {"last_record_seq", snapshot.last_record_seq},
            {"record_count", snapshot.record_count}}},
          {"context", context},
          {"status", open ? "open" : "closed"}};
}

ConversationSession ConversationSession::from_json(const json& j) {
  ConversationSession s;
  s.id = j.at("id").get<std::string>();
  s.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  for (const auto& m : j.at("messages")) {
    s.messages.push_back({speaker_from_string(m.at("speaker").get<std::string>()), m.at("text").get<std::string>(),
                          m.at("timestamp").get<Timestamp>()});
  }
  const auto& snap = j.at("snapshot");
  s.snapshot.profile_version = snap.at("profile_version").get<std::uint64_t>();
  s.snapshot.first_record_seq = snap.at("first_record_seq").get<std::uint64_t>();
  s.snapshot.last_record_seq = snap.at("last_record_seq").get<std::uint64_t>();
  s.snapshot.record_count = snap.at("record_count").get<std::size_t>();
  s.context = j.at("context").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  if (status != "open" && status != "closed") throw Error(Errc::InvalidArgument, "unknown session status " + status);
  s.open = status == "open";
  return s;
}

std::string render_profile(const graph::PreferenceProfile& profile) {
  if (profile.empty()) return "No preference profile has been learned yet.";
  std::vector<std::string> lines;
  for (std::size_t b = 0; b < graph::kBandCount; ++b) {
    const auto& labels = profile.bands[b];
    lines.push_back(std::string(graph::kBandNames[b]) + ": " + (labels.empty() ? "(none)" : text::join(labels, ", ")));
  }
  return text::join(lines, "\n");
}

ConversationSession open_session(std::string id, Strategy strategy, const graph::PreferenceProfile& profile,
                                 std::uint64_t profile_version, const std::vector<RecordRef>& records,
                                 Timestamp now) {
  ConversationSession session;
  session.id = std::move(id);
  session.strategy = strategy;
  session.snapshot.profile_version = profile_version;

  std::string opening;
  if (strategy == Strategy::ProfileExplanation) {
    if (profile.empty()) {
      opening =
          "I have not learned a preference profile yet because no clicks have been recorded. "
          "You can still tell me about content you would rather not see.";
      session.context = "No clicks have been recorded yet.";
    } else {
      opening = "This is the preference profile I have learned from your clicks:\n" + render_profile(profile) +
                "\nIs there anything here you would rather not see in your feed?";
      session.context = "You have just shown the user this profile and asked what they would rather not see.";
    }
  } else {
    const std::size_t start = records.size() > kRecordWindow ? records.size() - kRecordWindow : 0;
    std::vector<RecordRef> window(records.begin() + static_cast<std::ptrdiff_t>(start), records.end());
    session.snapshot.record_count = window.size();
    if (window.empty()) {
      opening =
          "Nothing has been filtered yet. "
          "You can still tell me about content you would rather not see.";
      session.context = "Nothing has been filtered from the user's feed yet.";
    } else {
      session.snapshot.first_record_seq = window.front().seq;
      session.snapshot.last_record_seq = window.back().seq;
      const auto lines = record_lines(window);
      opening = "These items were filtered out of your feed recently:\n" + lines +
                "\nDo these look right to you, and is there anything else you would rather not see?";
      session.context = "These items were recently filtered out of the user's feed:\n" + lines;
    }
  }
  session.messages.push_back({Speaker::Agent, std::move(opening), now});
  return session;
}

std::string_view apology_text() {
  return "Sorry, I could not come up with a reply just now. Please try again in a moment.";
}

Reply compute_reply(const ConversationSession& session, std::string_view user_message,
                    const graph::PreferenceProfile& current_profile, llm::Gateway& gateway) {
  if (!session.open) throw Error(Errc::SessionClosed, "session " + session.id + " is closed");
  if (text::trim(user_message).empty()) throw Error(Errc::InvalidArgument, "message must not be empty");

  llm::ChatRequest request;
  request.script_key = std::string(llm::keys::kNeedsReply);
  request.messages.push_back(llm::system_message());
  request.messages.push_back(
      {llm::Role::User, text::render(llm::prompt_template("v1/needs_context"),
                                     {{"profile", render_profile(current_profile)}, {"context", session.context}})});
  for (const auto& m : session.messages) {
    request.messages.push_back({m.speaker == Speaker::Agent ? llm::Role::Assistant : llm::Role::User, m.text});
  }
  request.messages.push_back({llm::Role::User, std::string(user_message)});
  try {
    return {gateway.complete(request).text, false};
  } catch (const Error& e) {
    if (!is_gateway_error(e.code())) throw;
    spdlog::warn("reply for session {} failed: {}", session.id, e.what());
    return {std::string(apology_text()), true};
  }
}

Round append_round(ConversationSession& session, std::string user_message, std::string agent_message,
                   Timestamp user_time, Timestamp agent_time) {
  if (!session.open) throw Error(Errc::SessionClosed, "session " + session.id + " is closed");
  Round round{session.id, session.rounds() + 1, user_message, agent_message};
  session.messages.push_back({Speaker::User, std::move(user_message), user_time});
  session.messages.push_back({Speaker::Agent, std::move(agent_message), agent_time});
  return round;
}

Round respond(ConversationSession& session, std::string user_message, const graph::PreferenceProfile& current_profile,
              llm::Gateway& gateway, Clock& clock, const RoundSink& sink) {
  const auto user_time = clock.now();
  auto reply = compute_reply(session, user_message, current_profile, gateway);
  auto round = append_round(session, std::move(user_message), std::move(reply.text), user_time, clock.now());
  if (sink) sink(round);
  return round;
}

}  // namespace feedguard::needs
