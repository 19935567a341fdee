#include <atomic>

#include <gtest/gtest.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/filter/filter.hpp"
#include "feedguard/filter/rules.hpp"
#include "feedguard/llm/prompts.hpp"
#include "support.hpp"

using namespace feedguard;
using namespace feedguard::filter;
using feedguard::fgtest::item;

namespace {

std::vector<Item> feed() {
  return {item("1", "Football transfer news"), item("2", "Baking sourdough bread"),
          item("3", "Celebrity football stars at the gala"), item("4", "Quantum computing basics")};
}

}  // namespace

TEST(RuleSet, LifecycleAndVersioning) {
  RuleSet rules;
  const auto& r1 = rules.add("  No football  ", 10);
  EXPECT_EQ(r1.id, "r1");
  EXPECT_EQ(r1.text, "No football");
  EXPECT_EQ(r1.version, 1u);
  rules.add("No gossip", 10, false);
  EXPECT_THROW(rules.add("   ", 11), Error);

  const auto& updated = rules.update_text("r1", "No sports at all");
  EXPECT_EQ(updated.version, 2u);
  EXPECT_EQ(updated.history, (std::vector<std::string>{"No football"}));
  EXPECT_EQ(rules.active().size(), 1u);
  rules.set_active("r2", true);
  EXPECT_EQ(rules.active().size(), 2u);
  EXPECT_EQ(rules.all()[0].id, "r1");

  rules.remove("r1");
  EXPECT_EQ(rules.find("r1"), nullptr);
  EXPECT_THROW(rules.get("r1"), Error);
  EXPECT_THROW(rules.update_text("r1", "x"), Error);
  EXPECT_EQ(rules.add("Third", 12).id, "r3");
  EXPECT_EQ(RuleSet::from_json(rules.to_json()), rules);
}

TEST(RuleSet, CreationOrderUsesOrdinalForTies) {
  std::vector<FilterRule> v{{"r3", "c", true, 1, 5, 3, {}}, {"r1", "a", true, 1, 5, 1, {}},
                            {"r2", "b", true, 1, 4, 2, {}}};
  sort_by_creation(v);
  EXPECT_EQ(v[0].id, "r2");
  EXPECT_EQ(v[1].id, "r1");
  EXPECT_EQ(v[2].id, "r3");
}

TEST(RuleMatcher, ThreeTurnProtocolAndCaching) {
  auto stub = fgtest::bundled_stub();
  std::vector<std::size_t> verdict_sizes;
  stub->set_handler(std::string(llm::keys::kFilterVerdict), [&](const llm::ChatRequest& r) {
    verdict_sizes.push_back(r.messages.size());
    EXPECT_TRUE(text::contains(r.messages[1].text, "\"Football transfer news\""));
    EXPECT_TRUE(text::contains(r.messages[3].text, "\"No football\""));
    return std::string(R"({"filter": true, "reason": "it is about football"})");
  });
  auto gw = fgtest::stub_gateway(stub);
  RuleMatcher matcher(*gw);
  RuleSet rules;
  const auto rule = rules.add("No football", 1);
  const auto d = matcher.match_rule(item("1", "Football transfer news"), rule, 100);
  EXPECT_TRUE(d.matched);
  EXPECT_EQ(d.rule_version, 1u);
  EXPECT_EQ(d.timestamp, 100);
  EXPECT_EQ(d.rationale, "it is about football");
  EXPECT_FALSE(d.item_topics.empty());
  EXPECT_EQ(verdict_sizes, (std::vector<std::size_t>{6}));

  const auto again = matcher.match_rule(item("1", "Football transfer news"), rule, 200);
  EXPECT_EQ(again, d);
  EXPECT_EQ(matcher.cache_hits(), 1u);
  EXPECT_EQ(verdict_sizes.size(), 1u);

  const auto edited = rules.update_text(rule.id, "No football");
  matcher.match_rule(item("1", "Football transfer news"), edited, 300);
  EXPECT_EQ(matcher.cache_size(), 2u);

  auto inactive = rule;
  inactive.active = false;
  try {
    matcher.match_rule(item("1", "x"), inactive, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InactiveRule);
  }
}

TEST(FilterFeed, FirstMatchingRuleWinsAndInactiveRulesAreIgnored) {
  auto gw = fgtest::stub_gateway();
  RuleMatcher matcher(*gw);
  RuleSet rules;
  rules.add("I do not want to see football", 1);
  rules.add("Nothing about celebrity gossip", 2);
  rules.add("Nothing about baking", 3, false);
  const auto result = filter_feed(feed(), rules.all(), matcher, 1'750'000'000'000);
  ASSERT_EQ(result.records.size(), 2u);
  EXPECT_EQ(result.records[0].item_id, "1");
  EXPECT_EQ(result.records[1].item_id, "3");
  EXPECT_EQ(result.records[1].matched_rule_id, "r1");
  EXPECT_EQ(result.records[0].day, "2025-06-15");
  ASSERT_EQ(result.kept.size(), 2u);
  EXPECT_EQ(result.kept[0].id, "2");
  EXPECT_EQ(result.kept[1].id, "4");
  // r1 sees all four items; r2 only the two r1 let through.
  EXPECT_EQ((result.processed.at({"r1", "2025-06-15"})), 4u);
  EXPECT_EQ((result.processed.at({"r2", "2025-06-15"})), 2u);
  EXPECT_EQ(result.processed.count({"r3", "2025-06-15"}), 0u);
}

TEST(FilterFeed, UndecidablePairsFailOpen) {
  auto stub = fgtest::bundled_stub();
  stub->set_handler(std::string(llm::keys::kFilterVerdict), [](const llm::ChatRequest&) {
    return std::string("maybe?");
  });
  auto gw = fgtest::stub_gateway(stub);
  RuleMatcher matcher(*gw);
  RuleSet rules;
  rules.add("No football", 1);
  const auto result = filter_feed(feed(), rules.all(), matcher, 0);
  EXPECT_EQ(result.kept.size(), 4u);
  EXPECT_TRUE(result.records.empty());
  EXPECT_EQ(result.unavailable.size(), 4u);
  EXPECT_EQ((result.processed.at({"r1", "1970-01-01"})), 4u);
}

TEST(FilterFeed, NoActiveRulesKeepsEverything) {
  auto gw = fgtest::stub_gateway();
  RuleMatcher matcher(*gw);
  const auto result = filter_feed(feed(), {}, matcher, 0);
  EXPECT_EQ(result.kept.size(), 4u);
  EXPECT_TRUE(result.processed.empty());
  EXPECT_EQ(gw->chat_calls(), 0u);
}

TEST(FilterFeed, ParallelMatchesSequential) {
  std::vector<Item> items;
  for (int i = 0; i < 60; ++i) {
    items.push_back(item("i" + std::to_string(i), i % 3 == 0 ? "Football league table " + std::to_string(i)
                                                             : "Gardening tips " + std::to_string(i)));
  }
  RuleSet rules;
  rules.add("No football", 1);
  rules.add("No gardening tips", 2);
  auto gw1 = fgtest::stub_gateway();
  RuleMatcher m1(*gw1);
  const auto seq = filter_feed(items, rules.all(), m1, 5);
  auto gw2 = fgtest::stub_gateway();
  RuleMatcher m2(*gw2);
  FilterOptions par;
  par.parallelism = 8;
  const auto parallel = filter_feed(items, rules.all(), m2, 5, par);
  EXPECT_EQ(seq.records, parallel.records);
  EXPECT_EQ(seq.processed, parallel.processed);
  EXPECT_EQ(seq.kept, parallel.kept);
  EXPECT_EQ(seq.records.size(), 60u);
}

TEST(FilterStats, EfficiencyIsFilteredOverProcessed) {
  std::vector<FilterRecord> records;
  for (int i = 0; i < 124; ++i) records.push_back({"i" + std::to_string(i), "t", "r1", {}, "2024-03-01"});
  records.push_back({"x", "t", "r2", {}, "2024-03-01"});
  ProcessedCounts processed{{{"r1", "2024-03-01"}, 1093}, {{"r2", "2024-03-01"}, 4}, {{"r3", "2024-03-02"}, 7}};
  EXPECT_NEAR(*filtering_efficiency(records, processed, "r1", "2024-03-01"), 124.0 / 1093.0, 1e-15);
  EXPECT_FALSE(filtering_efficiency(records, processed, "r1", "2024-03-02"));
  const auto stats = compute_stats(records, processed);
  ASSERT_EQ(stats.size(), 3u);
  EXPECT_EQ(stats[0].rule_id, "r1");
  EXPECT_EQ(stats[0].filtered, 124u);
  EXPECT_EQ(stats[2].filtered, 0u);
  EXPECT_EQ(*stats[2].efficiency, 0.0);
}

TEST(FilterRecord, JsonRoundTrip) {
  FilterDecision d{"i", "r1", 2, true, {"a"}, {"b"}, "why", 9};
  FilterRecord r{"i", "title", "r1", d, "2024-01-01"};
  EXPECT_EQ(FilterRecord::from_json(r.to_json()), r);
  EXPECT_EQ(FilterDecision::from_json(d.to_json()), d);
}
