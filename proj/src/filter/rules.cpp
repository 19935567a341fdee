#include "feedguard/filter/rules.hpp"

#include <algorithm>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"

namespace feedguard::filter {

namespace {

std::string checked_text(std::string text) {
  text = text::trim(text);
  if (text.empty()) throw Error(Errc::InvalidArgument, "rule text must not be empty");
  return text;
}

}  // namespace

json FilterRule::to_json() const {
  return {{"id", id},
          {"text", text},
          {"active", active},
          {"version", version},
          {"created_at", created_at},
          {"ordinal", ordinal},
          {"history", history}};
}

FilterRule FilterRule::from_json(const json& j) {
  FilterRule rule;
  rule.id = j.at("id").get<std::string>();
  rule.text = j.at("text").get<std::string>();
  rule.active = j.at("active").get<bool>();
  rule.version = j.at("version").get<std::uint64_t>();
  rule.created_at = j.at("created_at").get<Timestamp>();
  rule.ordinal = j.at("ordinal").get<std::uint64_t>();
  rule.history = j.at("history").get<std::vector<std::string>>();
  return rule;
}

const FilterRule& RuleSet::add(std::string text, Timestamp now, bool active) {
  FilterRule rule;
  rule.text = checked_text(std::move(text));
  rule.ordinal = next_ordinal_++;
  rule.id = "r" + std::to_string(rule.ordinal);
  rule.active = active;
  rule.created_at = now;
  auto [it, inserted] = rules_.emplace(rule.id, std::move(rule));
  return it->second;
}

const FilterRule& RuleSet::update_text(const std::string& id, std::string text) {
  auto& rule = mutable_rule(id);
  auto next = checked_text(std::move(text));
  rule.history.push_back(std::move(rule.text));
  rule.text = std::move(next);
  ++rule.version;
  return rule;
}

const FilterRule& RuleSet::set_active(const std::string& id, bool active) {
  auto& rule = mutable_rule(id);
  rule.active = active;
  return rule;
}

void RuleSet::remove(const std::string& id) {
  if (rules_.erase(id) == 0) throw Error(Errc::NotFound, "no rule " + id);
}

const FilterRule* RuleSet::find(const std::string& id) const {
  auto it = rules_.find(id);
  return it == rules_.end() ? nullptr : &it->second;
}

const FilterRule& RuleSet::get(const std::string& id) const {
  const auto* rule = find(id);
  if (rule == nullptr) throw Error(Errc::NotFound, "no rule " + id);
  return *rule;
}

FilterRule& RuleSet::mutable_rule(const std::string& id) {
  auto it = rules_.find(id);
  if (it == rules_.end()) throw Error(Errc::NotFound, "no rule " + id);
  return it->second;
}

std::vector<FilterRule> RuleSet::all() const {
  std::vector<FilterRule> out;
  out.reserve(rules_.size());
  for (const auto& [id, rule] : rules_) out.push_back(rule);
  sort_by_creation(out);
  return out;
}

std::vector<FilterRule> RuleSet::active() const {
  auto out = all();
  std::erase_if(out, [](const FilterRule& r) { return !r.active; });
  return out;
}

json RuleSet::to_json() const {
  json rules = json::array();
  for (const auto& rule : all()) rules.push_back(rule.to_json());
  return {{"rules", std::move(rules)}, {"next_ordinal", next_ordinal_}};
}

RuleSet RuleSet::from_json(const json& j) {
  RuleSet set;
  for (const auto& r : j.at("rules")) {
    auto rule = FilterRule::from_json(r);
    set.rules_.emplace(rule.id, std::move(rule));
  }
  set.next_ordinal_ = j.at("next_ordinal").get<std::uint64_t>();
  return set;
}

void sort_by_creation(std::vector<FilterRule>& rules) {
  std::sort(rules.begin(), rules.end(), [](const FilterRule& a, const FilterRule& b) {
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return a.ordinal < b.ordinal;
  });
}

}  // namespace feedguard::filter
