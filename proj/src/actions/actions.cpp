#include "feedguard/actions/actions.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"

namespace feedguard::actions {

namespace {

ActionKind kind_from_string(std::string_view s) {
  if (s == "add") return ActionKind::Add;
  if (s == "update") return ActionKind::Update;
  throw Error(Errc::InvalidArgument, "unknown action kind " + std::string(s));
}

ActionStatus status_from_string(std::string_view s) {
  if (s == "proposed") return ActionStatus::Proposed;
  if (s == "confirmed") return ActionStatus::Confirmed;
  if (s == "rejected") return ActionStatus::Rejected;
  throw Error(Errc::InvalidArgument, "unknown action status " + std::string(s));
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

std::string_view to_string(ActionKind k) { return k == ActionKind::Add ? "add" : "update"; }

std::string_view to_string(ActionStatus s) {
  switch (s) {
    case ActionStatus::Proposed: return "proposed";
    case ActionStatus::Confirmed: return "confirmed";
    case ActionStatus::Rejected: return "rejected";
  }
  return "proposed";
}

json ManagementAction::to_json() const {
  return {{"id", id},
          {"kind", to_string(kind)},
          {"target_rule_id", optional_json(target_rule_id)},
          {"target_version", optional_json(target_version)},
          {"proposed_text", proposed_text},
          {"status", to_string(status)},
          {"need", {{"text", need.text}, {"session_id", need.session_id}, {"round", need.round}}},
          {"duplicate_of", optional_json(duplicate_of)},
          {"proposed_at", proposed_at},
          {"final_text", optional_json(final_text)},
          {"result_rule_id", optional_json(result_rule_id)},
          {"resolved_at", optional_json(resolved_at)}};
}

ManagementAction ManagementAction::from_json(const json& j) {
  ManagementAction a;
  a.id = j.at("id").get<std::string>();
  a.kind = kind_from_string(j.at("kind").get<std::string>());
  a.target_rule_id = optional_from<std::string>(j, "target_rule_id");
  a.target_version = optional_from<std::uint64_t>(j, "target_version");
  a.proposed_text = j.at("proposed_text").get<std::string>();
  a.status = status_from_string(j.at("status").get<std::string>());
  const auto& need = j.at("need");
  a.need = {need.at("text").get<std::string>(), need.at("session_id").get<std::string>(),
            need.at("round").get<std::size_t>()};
  a.duplicate_of = optional_from<std::string>(j, "duplicate_of");
  a.proposed_at = j.at("proposed_at").get<Timestamp>();
  a.final_text = optional_from<std::string>(j, "final_text");
  a.result_rule_id = optional_from<std::string>(j, "result_rule_id");
  a.resolved_at = optional_from<Timestamp>(j, "resolved_at");
  if (a.kind == ActionKind::Update && (!a.target_rule_id || !a.target_version)) {
    throw Error(Errc::InvalidArgument, "update action " + a.id + " has no target");
  }
  return a;
}

std::optional<FilteringNeed> detect_need(const needs::Round& round, llm::Gateway& gateway) {
  auto prompt = text::render(llm::prompt_template("v1/detect_need"),
                             {{"user_message", round.user_message}, {"agent_message", round.agent_message}});
  try {
    auto response = gateway.complete_structured(llm::single_turn(llm::keys::kDetectNeed, std::move(prompt)),
                                                llm::schemas::kFilteringNeed);
    const auto& need = response.parsed->at("need");
    if (need.is_null()) return std::nullopt;
    auto need_text = text::trim(need.get<std::string>());
    if (need_text.empty()) return std::nullopt;
    return FilteringNeed{std::move(need_text), round.session_id, round.index};
  } catch (const Error& e) {
    if (!is_gateway_error(e.code())) throw;
    spdlog::warn("need detection for session {} round {} failed: {}", round.session_id, round.index, e.what());
    return std::nullopt;
  }
}

ManagementAction propose_action(const FilteringNeed& need, const std::vector<filter::FilterRule>& rules,
                                llm::Gateway& gateway, Timestamp now) {
  if (text::trim(need.text).empty()) throw Error(Errc::InvalidArgument, "filtering need is empty");
  ManagementAction action;
  action.need = need;
  action.proposed_at = now;
  action.proposed_text = need.text;

  auto ordered = rules;
  filter::sort_by_creation(ordered);

  const auto key = text::normalize(need.text);
  for (const auto& rule : ordered) {
    if (rule.active && text::normalize(rule.text) == key) {
      action.kind = ActionKind::Update;
      action.target_rule_id = rule.id;
      action.target_version = rule.version;
      action.duplicate_of = rule.id;
      action.proposed_text = rule.text;
      return action;
    }
  }
  if (ordered.empty()) return action;

  if (ordered.size() > kMaxRulesInPrompt) {
    ordered.erase(ordered.begin(), ordered.end() - static_cast<std::ptrdiff_t>(kMaxRulesInPrompt));
  }
  std::set<std::string> listed;
  std::vector<std::string> lines;
  for (const auto& rule : ordered) {
    listed.insert(rule.id);
    lines.push_back(fmt::format("[{}] {}", rule.id, rule.text));
  }
  auto prompt = text::render(llm::prompt_template("v1/rule_relevance"),
                             {{"rules", text::join(lines, "\n")}, {"need", text::quote(need.text)}});
  auto listed_rule = [&](const json& payload) -> std::optional<std::string> {
    const auto& id = payload.at("related_rule_id");
    if (id.is_null() || listed.count(id.get<std::string>())) return std::nullopt;
    return fmt::format("rule {} is not in the list", id.dump());
  };
  auto response = gateway.complete_structured(llm::single_turn(llm::keys::kRuleRelevance, std::move(prompt)),
                                              llm::schemas::kRuleRelevance, listed_rule);
  const auto& payload = *response.parsed;
  if (payload.at("related_rule_id").is_null()) return action;

  const auto target = payload.at("related_rule_id").get<std::string>();
  const auto it = std::find_if(ordered.begin(), ordered.end(), [&](const auto& r) { return r.id == target; });
  action.kind = ActionKind::Update;
  action.target_rule_id = target;
  action.target_version = it->version;
  action.proposed_text = text::trim(payload.at("merged_text").get<std::string>());
  return action;
}

void apply_action(filter::RuleSet& rules, ManagementAction& action, std::string_view edited_text, bool confirmed,
                  Timestamp now) {
  if (action.status != ActionStatus::Proposed) {
    throw Error(Errc::StaleAction, fmt::format("action {} is already {}", action.id, to_string(action.status)));
  }
  if (!confirmed) {
    action.status = ActionStatus::Rejected;
    action.resolved_at = now;
    return;
  }
  auto final_text = text::trim(edited_text);
  if (final_text.empty()) throw Error(Errc::InvalidArgument, "confirmed text must not be empty");

  if (action.kind == ActionKind::Add) {
    const auto& rule = rules.add(final_text, now, true);
    action.result_rule_id = rule.id;
  } else {
    const auto* target = rules.find(*action.target_rule_id);
    if (target == nullptr) {
      throw Error(Errc::StaleAction, fmt::format("rule {} was deleted after action {} was proposed",
                                                 *action.target_rule_id, action.id));
    }
    if (target->version != *action.target_version) {
      throw Error(Errc::StaleAction, fmt::format("rule {} changed (version {} -> {}) after action {} was proposed",
                                                 target->id, *action.target_version, target->version, action.id));
    }
    rules.update_text(target->id, final_text);
    action.result_rule_id = target->id;
  }
  action.status = ActionStatus::Confirmed;
  action.final_text = std::move(final_text);
  action.resolved_at = now;
}

std::optional<double> acceptance_rate(const std::vector<ManagementAction>& actions) {
  if (actions.empty()) return std::nullopt;
  auto confirmed = std::count_if(actions.begin(), actions.end(),
                                 [](const ManagementAction& a) { return a.status == ActionStatus::Confirmed; });
  return static_cast<double>(confirmed) / static_cast<double>(actions.size());
}

}  // namespace feedguard::actions
