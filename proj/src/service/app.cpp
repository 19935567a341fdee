#include "feedguard/service/app.hpp"

#include <spdlog/spdlog.h>

#include "feedguard/actions/actions.hpp"
#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/needs/conversation.hpp"

namespace feedguard::service {

namespace {

const json& require_object(const json& body) {
  if (!body.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
  return body;
}

std::string require_string(const json& body, const char* key) {
  require_object(body);
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(Errc::InvalidArgument, std::string("\"") + key + "\" must be a string");
  }
  return body[key].get<std::string>();
}

std::optional<bool> optional_bool(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  if (!body[key].is_boolean()) throw Error(Errc::InvalidArgument, std::string("\"") + key + "\" must be a boolean");
  return body[key].get<bool>();
}

json record_row(const needs::RecordRef& ref) {
  auto row = ref.record.to_json();
  row["seq"] = ref.seq;
  return row;
}

json stats_row(const filter::FilterStats& s) {
  return {{"rule_id", s.rule_id},
          {"day", s.day},
          {"processed", s.processed},
          {"filtered", s.filtered},
          {"efficiency", s.efficiency ? json(*s.efficiency) : json(nullptr)}};
}

}  // namespace

App::App(std::filesystem::path data_dir, std::shared_ptr<llm::Gateway> gateway, std::shared_ptr<Clock> clock,
         AppOptions options)
    : gateway_(std::move(gateway)),
      clock_(std::move(clock)),
      options_(std::move(options)),
      repo_(std::move(data_dir), options_.store),
      builder_(*gateway_, options_.builder),
      matcher_(*gateway_) {}

std::uint64_t App::commit(std::string_view kind, json payload) {
  return repo_.commit(kind, std::move(payload), clock_->now());
}

const needs::ConversationSession& App::session(const std::string& id) const {
  const auto& sessions = repo_.state().sessions;
  auto it = sessions.find(id);
  if (it == sessions.end()) throw Error(Errc::NotFound, "no conversation " + id);
  return it->second;
}

json App::ingest_impression(const json& body) {
  auto impression = profile::impression_from_json(require_object(body));
  std::lock_guard lock(mutex_);
  const auto& current = repo_.state().profile;
  if (current.ingested.count(impression.impression_id)) {
    spdlog::warn("impression {} was already ingested; ignoring", impression.impression_id);
    return {{"ingested", false},
            {"duplicate", true},
            {"impression_id", impression.impression_id},
            {"profile_version", current.version}};
  }
  const auto now = clock_->now();
  auto outcome = builder_.process(current, impression, now);
  const auto seq = repo_.commit(store::kinds::kImpressionIngested, store::impression_payload(impression, outcome), now);
  const auto& state = repo_.state().profile;
  return {{"ingested", true},
          {"duplicate", false},
          {"impression_id", impression.impression_id},
          {"pairs", outcome.pairs},
          {"skipped_pairs", outcome.skipped.size()},
          {"profile_version", state.version},
          {"seq", seq}};
}

json App::filter_feed(const json& body) {
  require_object(body);
  if (!body.contains("items") || !body["items"].is_array()) {
    throw Error(Errc::InvalidArgument, "\"items\" must be an array of items");
  }
  std::vector<profile::Item> items;
  for (const auto& j : body["items"]) items.push_back(profile::item_from_json(j));

  std::lock_guard lock(mutex_);
  const auto now = clock_->now();
  auto result = filter::filter_feed(items, repo_.state().rules.all(), matcher_, now, options_.filter);
  const auto seq = repo_.commit(store::kinds::kFeedFiltered, store::feed_payload(items.size(), result), now);

  json kept = json::array();
  for (const auto& item : result.kept) kept.push_back(profile::item_to_json(item));
  json filtered = json::array();
  std::size_t next = 0;
  for (const auto& record : result.records) {
    while (next < items.size() && items[next].id != record.item_id) ++next;
    filtered.push_back({{"item", profile::item_to_json(items.at(next))}, {"record", record.to_json()}});
    ++next;
  }
  json unavailable = json::array();
  for (const auto& [item, rule] : result.unavailable) unavailable.push_back({{"item_id", item}, {"rule_id", rule}});
  return {{"kept", std::move(kept)}, {"filtered", std::move(filtered)}, {"unavailable", std::move(unavailable)},
          {"seq", seq}};
}

json App::list_rules() const {
  std::lock_guard lock(mutex_);
  json rules = json::array();
  for (const auto& r : repo_.state().rules.all()) rules.push_back(r.to_json());
  return {{"rules", std::move(rules)}};
}

json App::create_rule(const json& body) {
  auto text_value = require_string(body, "text");
  const bool active = optional_bool(body, "active").value_or(true);
  json payload{{"text", text_value}, {"active", active}};
  std::lock_guard lock(mutex_);
  const auto now = clock_->now();
  repo_.check(store::kinds::kRuleCreated, payload, now);
  const auto id = "r" + std::to_string(repo_.state().rules.next_ordinal());
  repo_.commit(store::kinds::kRuleCreated, std::move(payload), now);
  return {{"rule", repo_.state().rules.get(id).to_json()}};
}

json App::patch_rule(const std::string& id, const json& body) {
  require_object(body);
  const bool has_text = body.contains("text");
  const auto active = optional_bool(body, "active");
  if (!has_text && !active) throw Error(Errc::InvalidArgument, "nothing to change; send \"text\" and/or \"active\"");
  std::lock_guard lock(mutex_);
  const auto& rule = repo_.state().rules.get(id);
  if (has_text) {
    json payload{{"rule_id", id}, {"text", require_string(body, "text")}};
    const auto now = clock_->now();
    repo_.check(store::kinds::kRuleUpdated, payload, now);
    if (text::trim(payload["text"].get<std::string>()) != rule.text) {
      repo_.commit(store::kinds::kRuleUpdated, std::move(payload), now);
    }
  }
  if (active && *active != repo_.state().rules.get(id).active) {
    commit(store::kinds::kRuleActivation, {{"rule_id", id}, {"active", *active}});
  }
  return {{"rule", repo_.state().rules.get(id).to_json()}};
}

json App::delete_rule(const std::string& id) {
  std::lock_guard lock(mutex_);
  repo_.state().rules.get(id);
  commit(store::kinds::kRuleDeleted, {{"rule_id", id}});
  return {{"deleted", id}};
}

json App::set_rule_active(const std::string& id, bool active) {
  std::lock_guard lock(mutex_);
  if (repo_.state().rules.get(id).active != active) {
    commit(store::kinds::kRuleActivation, {{"rule_id", id}, {"active", active}});
  }
  return {{"rule", repo_.state().rules.get(id).to_json()}};
}

json App::profile() const {
  std::lock_guard lock(mutex_);
  const auto& p = repo_.state().profile;
  return {{"user_id", p.user_id},
          {"version", p.version},
          {"watermark", p.watermark},
          {"converged", p.ranked.converged},
          {"iterations", p.ranked.iterations},
          {"bands", p.profile.to_json()},
          {"skipped_pairs", p.skipped.size()}};
}

json App::profile_graph() const {
  std::lock_guard lock(mutex_);
  const auto& p = repo_.state().profile;
  std::map<std::string, double> scores;
  for (const auto& e : p.ranked.entries) scores[e.id] = e.score;
  json nodes = json::array();
  for (const auto* node : p.graph.nodes_by_creation()) {
    nodes.push_back({{"id", node->id},
                     {"label", node->label},
                     {"absorbed_labels", node->absorbed_labels},
                     {"created_at", node->created_at},
                     {"score", scores.count(node->id) ? json(scores[node->id]) : json(nullptr)}});
  }
  json edges = json::array();
  for (const auto& [key, weight] : p.graph.edges()) {
    edges.push_back({{"from", key.first}, {"to", key.second}, {"weight", weight}});
  }
  return {{"version", p.version},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"discarded_self_loop_weight", p.graph.discarded_self_loop_weight()}};
}

json App::filter_records(const store::RecordQuery& query) const {
  std::lock_guard lock(mutex_);
  auto page = store::query_records(repo_.state(), query);
  json rows = json::array();
  for (const auto& ref : page.rows) rows.push_back(record_row(ref));
  return {{"records", std::move(rows)}, {"total", page.total}, {"offset", query.offset}, {"limit", query.limit}};
}

json App::filter_stats(const std::optional<std::string>& rule_id) const {
  std::lock_guard lock(mutex_);
  json rows = json::array();
  for (const auto& s : store::query_stats(repo_.state(), rule_id)) rows.push_back(stats_row(s));
  return {{"stats", std::move(rows)}};
}

json App::open_conversation(const json& body) {
  const auto strategy = needs::strategy_from_string(require_string(body, "strategy"));
  std::lock_guard lock(mutex_);
  const auto& state = repo_.state();
  const auto now = clock_->now();
  auto session = needs::open_session("s" + std::to_string(state.next_session), strategy, state.profile.profile,
                                     state.profile.version, state.records, now);
  const auto id = session.id;
  repo_.commit(store::kinds::kSessionOpened, {{"session", session.to_json()}}, now);
  return {{"conversation", repo_.state().sessions.at(id).to_json()}};
}

json App::post_message(const std::string& session_id, const json& body) {
  auto user_text = text::trim(require_string(body, "text"));
  std::lock_guard lock(mutex_);
  const auto& state = repo_.state();
  const auto& current = session(session_id);
  const auto user_time = clock_->now();
  auto reply = needs::compute_reply(current, user_text, state.profile.profile, *gateway_);
  const auto agent_time = clock_->now();

  const needs::Round round{session_id, current.rounds() + 1, user_text, reply.text};
  auto need = actions::detect_need(round, *gateway_);
  std::optional<actions::ManagementAction> action;
  if (need) {
    try {
      action = actions::propose_action(*need, state.rules.all(), *gateway_, agent_time);
      action->id = "a" + std::to_string(state.next_action);
    } catch (const Error& e) {
      if (!is_gateway_error(e.code())) throw;
      spdlog::warn("no action proposed for need \"{}\": {}", need->text, e.what());
    }
  }
  repo_.commit(store::kinds::kConversationRound,
               store::round_payload(session_id, user_text, user_time, reply.text, agent_time, reply.apology, need,
                                    action),
               agent_time);

  json need_json = need ? json{{"text", need->text}, {"session_id", need->session_id}, {"round", need->round}}
                        : json(nullptr);
  return {{"reply", reply.text},
          {"apology", reply.apology},
          {"need", std::move(need_json)},
          {"action", action ? repo_.state().actions.at(action->id).to_json() : json(nullptr)},
          {"conversation", repo_.state().sessions.at(session_id).to_json()}};
}

json App::get_conversation(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return {{"conversation", session(session_id).to_json()}};
}

json App::close_conversation(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  if (session(session_id).open) commit(store::kinds::kSessionClosed, {{"session_id", session_id}});
  return {{"conversation", session(session_id).to_json()}};
}

json App::pending_actions() const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const auto& [id, a] : repo_.state().actions) {
    if (a.status == actions::ActionStatus::Proposed) out.push_back(a.to_json());
  }
  return {{"actions", std::move(out)}};
}

json App::confirm_action(const std::string& action_id, const json& body) {
  require_object(body);
  const auto confirmed = optional_bool(body, "confirmed");
  if (!confirmed) throw Error(Errc::InvalidArgument, "\"confirmed\" must be a boolean");
  std::lock_guard lock(mutex_);
  const auto& actions = repo_.state().actions;
  auto it = actions.find(action_id);
  if (it == actions.end()) throw Error(Errc::NotFound, "no action " + action_id);
  std::string edited = it->second.proposed_text;
  if (body.contains("editedText") && !body["editedText"].is_null()) edited = require_string(body, "editedText");

  json payload{{"action_id", action_id}, {"confirmed", *confirmed}, {"edited_text", edited}};
  const auto now = clock_->now();
  repo_.check(store::kinds::kActionResolved, payload, now);
  repo_.commit(store::kinds::kActionResolved, std::move(payload), now);

  const auto& action = repo_.state().actions.at(action_id);
  json out{{"action", action.to_json()}, {"rule", nullptr}};
  if (action.result_rule_id) out["rule"] = repo_.state().rules.get(*action.result_rule_id).to_json();
  return out;
}

json App::health() const {
  std::lock_guard lock(mutex_);
  return {{"status", "ok"}, {"last_seq", repo_.last_seq()}, {"backend", gateway_->backend_id()}};
}

store::AppState App::state() const {
  std::lock_guard lock(mutex_);
  return repo_.state();
}

std::filesystem::path App::data_dir() const { return repo_.dir(); }

}  // namespace feedguard::service
