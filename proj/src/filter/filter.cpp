#include "feedguard/filter/filter.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"

namespace feedguard::filter {

namespace {

std::vector<std::string> topics_of(const json& parsed) {
  std::vector<std::string> out;
  for (const auto& t : parsed.at("topics")) out.push_back(text::trim(t.get<std::string>()));
  return out;
}

std::string decision_rationale(const json& verdict, const std::vector<std::string>& item_topics,
                               const std::vector<std::string>& rule_topics) {
  if (verdict.contains("reason") && verdict["reason"].is_string()) {
    auto reason = text::trim(verdict["reason"].get<std::string>());
    if (!reason.empty()) return reason;
  }
  return fmt::format("question topics: {}; rule topics: {}", text::join(item_topics, ", "),
                     text::join(rule_topics, ", "));
}

// Runs one structured turn of the conversation and appends the exchange.
json converse(llm::Gateway& gateway, std::vector<llm::ChatMessage>& messages, std::string_view script_key,
              std::string prompt, std::string_view schema) {
  messages.push_back({llm::Role::User, std::move(prompt)});
  llm::ChatRequest request;
  request.messages = messages;
  request.script_key = std::string(script_key);
  auto response = gateway.complete_structured(std::move(request), schema);
  messages.push_back({llm::Role::Assistant, response.text});
  return *response.parsed;
}

}  // namespace

json FilterDecision::to_json() const {
  return {{"item_id", item_id},         {"rule_id", rule_id},       {"rule_version", rule_version},
          {"matched", matched},         {"item_topics", item_topics}, {"rule_topics", rule_topics},
          {"rationale", rationale},     {"timestamp", timestamp}};
}

FilterDecision FilterDecision::from_json(const json& j) {
  FilterDecision d;
  d.item_id = j.at("item_id").get<std::string>();
  d.rule_id = j.at("rule_id").get<std::string>();
  d.rule_version = j.at("rule_version").get<std::uint64_t>();
  d.matched = j.at("matched").get<bool>();
  d.item_topics = j.at("item_topics").get<std::vector<std::string>>();
  d.rule_topics = j.at("rule_topics").get<std::vector<std::string>>();
  d.rationale = j.at("rationale").get<std::string>();
  d.timestamp = j.at("timestamp").get<Timestamp>();
  return d;
}

json FilterRecord::to_json() const {
  return {{"item_id", item_id},
          {"item_title", item_title},
          {"matched_rule_id", matched_rule_id},
          {"decision", decision.to_json()},
          {"day", day}};
}

FilterRecord FilterRecord::from_json(const json& j) {
  FilterRecord r;
  r.item_id = j.at("item_id").get<std::string>();
  r.item_title = j.at("item_title").get<std::string>();
  r.matched_rule_id = j.at("matched_rule_id").get<std::string>();
  r.decision = FilterDecision::from_json(j.at("decision"));
  r.day = j.at("day").get<std::string>();
  return r;
}

RuleMatcher::RuleMatcher(llm::Gateway& gateway) : gateway_(gateway) {}

FilterDecision RuleMatcher::match_rule(const Item& item, const FilterRule& rule, Timestamp now) {
  if (!rule.active) throw Error(Errc::InactiveRule, "rule " + rule.id + " is inactive");
  Key key{item.id, rule.id, rule.version};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto decision = evaluate(item, rule, now);
  std::lock_guard lock(mutex_);
  // A concurrent evaluation of the same key may have landed first; keep it.
  auto [it, inserted] = cache_.emplace(std::move(key), std::move(decision));
  return it->second;
}

FilterDecision RuleMatcher::evaluate(const Item& item, const FilterRule& rule, Timestamp now) {
  std::vector<llm::ChatMessage> messages{llm::system_message()};
  try {
    auto item_reply = converse(gateway_, messages, llm::keys::kFilterItemTopics,
                               text::render(llm::prompt_template("v1/filter_item_topics"),
                                            {{"title", text::quote(item.title)}, {"summary", text::quote(item.summary)}}),
                               llm::schemas::kTopicList);
    auto rule_reply = converse(gateway_, messages, llm::keys::kFilterRuleTopics,
                               text::render(llm::prompt_template("v1/filter_rule_topics"),
                                            {{"rule", text::quote(rule.text)}}),
                               llm::schemas::kTopicList);
    auto verdict = converse(gateway_, messages, llm::keys::kFilterVerdict,
                            llm::prompt_template("v1/filter_verdict"), llm::schemas::kFilterVerdict);

    FilterDecision d;
    d.item_id = item.id;
    d.rule_id = rule.id;
    d.rule_version = rule.version;
    d.matched = verdict.at("filter").get<bool>();
    d.item_topics = topics_of(item_reply);
    d.rule_topics = topics_of(rule_reply);
    d.rationale = decision_rationale(verdict, d.item_topics, d.rule_topics);
    d.timestamp = now;
    return d;
  } catch (const Error& e) {
    if (!is_gateway_error(e.code())) throw;
    throw Error(Errc::DecisionUnavailable,
                fmt::format("no decision for item {} under rule {}: {}", item.id, rule.id, e.what()));
  }
}

std::size_t RuleMatcher::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::uint64_t RuleMatcher::cache_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

namespace {

struct ItemOutcome {
  std::optional<FilterRecord> record;
  std::vector<std::string> evaluated_rules;
  std::vector<std::string> unavailable_rules;
};

ItemOutcome evaluate_item(const Item& item, const std::vector<FilterRule>& rules, RuleMatcher& matcher,
                          Timestamp now, const std::string& day) {
  ItemOutcome out;
  for (const auto& rule : rules) {
    out.evaluated_rules.push_back(rule.id);
    try {
      auto decision = matcher.match_rule(item, rule, now);
      if (decision.matched) {
        out.record = FilterRecord{item.id, item.title, rule.id, std::move(decision), day};
        break;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::DecisionUnavailable) throw;
      spdlog::warn("{}; showing the item", e.what());
      out.unavailable_rules.push_back(rule.id);
    }
  }
  return out;
}

}  // namespace

FeedResult filter_feed(const std::vector<Item>& items, const std::vector<FilterRule>& rules, RuleMatcher& matcher,
                       Timestamp now, const FilterOptions& options) {
  std::vector<FilterRule> active;
  for (const auto& r : rules) {
    if (r.active) active.push_back(r);
  }
  sort_by_creation(active);
  const std::string day = day_of(now);

  std::vector<ItemOutcome> outcomes(items.size());
  const std::size_t workers = std::min(std::max<std::size_t>(options.parallelism, 1), items.size());
  if (active.empty()) {
    // Nothing to evaluate.
  } else if (workers <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) outcomes[i] = evaluate_item(items[i], active, matcher, now, day);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
          try {
            outcomes[i] = evaluate_item(items[i], active, matcher, now, day);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  FeedResult result;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& outcome = outcomes[i];
    for (const auto& rule_id : outcome.evaluated_rules) ++result.processed[{rule_id, day}];
    for (auto& rule_id : outcome.unavailable_rules) result.unavailable.emplace_back(items[i].id, std::move(rule_id));
    if (outcome.record) {
      result.records.push_back(std::move(*outcome.record));
    } else {
      result.kept.push_back(items[i]);
    }
  }
  return result;
}

std::optional<double> filtering_efficiency(const std::vector<FilterRecord>& records, const ProcessedCounts& processed,
                                           const std::string& rule_id, const std::string& day) {
  auto it = processed.find({rule_id, day});
  if (it == processed.end() || it->second == 0) return std::nullopt;
  auto filtered = std::count_if(records.begin(), records.end(), [&](const FilterRecord& r) {
    return r.matched_rule_id == rule_id && r.day == day;
  });
  return static_cast<double>(filtered) / static_cast<double>(it->second);
}

std::vector<FilterStats> compute_stats(const std::vector<FilterRecord>& records, const ProcessedCounts& processed) {
  std::map<std::pair<std::string, std::string>, FilterStats> by_key;
  for (const auto& [key, count] : processed) {
    auto& s = by_key[key];
    s.rule_id = key.first;
    s.day = key.second;
    s.processed = count;
  }
  for (const auto& r : records) {
    auto& s = by_key[{r.matched_rule_id, r.day}];
    s.rule_id = r.matched_rule_id;
    s.day = r.day;
    ++s.filtered;
  }
  std::vector<FilterStats> out;
  out.reserve(by_key.size());
  for (auto& [key, s] : by_key) {
    if (s.processed > 0) s.efficiency = static_cast<double>(s.filtered) / static_cast<double>(s.processed);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace feedguard::filter
