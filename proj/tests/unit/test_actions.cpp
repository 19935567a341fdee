#include <gtest/gtest.h>

#include "feedguard/actions/actions.hpp"
#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"
#include "support.hpp"

using namespace feedguard;
using namespace feedguard::actions;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::InvalidArgument;
}

FilteringNeed need(std::string text) { return {std::move(text), "c1", 2}; }

std::shared_ptr<llm::StubBackend> relevance_stub(std::string reply, std::string* prompt = nullptr) {
  auto stub = fgtest::bundled_stub();
  stub->set_handler(std::string(llm::keys::kRuleRelevance), [reply, prompt](const llm::ChatRequest& r) {
    if (prompt != nullptr) *prompt = r.messages.back().text;
    return reply;
  });
  return stub;
}

}  // namespace

TEST(DetectNeed, EchoesExplicitNeeds) {
  auto gw = fgtest::stub_gateway();
  const auto found = detect_need({"c1", 3, "I do not want to see crypto news", "Understood."}, *gw);
  ASSERT_TRUE(found);
  EXPECT_EQ(found->text, "I do not want to see crypto news");
  EXPECT_EQ(found->session_id, "c1");
  EXPECT_EQ(found->round, 3u);
  EXPECT_FALSE(detect_need({"c1", 1, "This looks about right", "Great."}, *gw));
}

TEST(DetectNeed, GatewayFailureMeansNoNeed) {
  auto gw = fgtest::stub_gateway(std::make_shared<llm::StubBackend>());
  EXPECT_FALSE(detect_need({"c1", 1, "I do not want to see crypto", "ok"}, *gw));
  auto stub = fgtest::bundled_stub();
  stub->set_handler(std::string(llm::keys::kDetectNeed), [](const llm::ChatRequest&) {
    return std::string(R"({"need": "   "})");
  });
  auto blank = fgtest::stub_gateway(stub);
  EXPECT_FALSE(detect_need({"c1", 1, "I do not want to see crypto", "ok"}, *blank));
}

TEST(ProposeAction, AddWithoutRulesMakesNoModelCall) {
  auto gw = fgtest::stub_gateway();
  const auto a = propose_action(need("I do not want to see crypto"), {}, *gw, 50);
  EXPECT_EQ(a.kind, ActionKind::Add);
  EXPECT_EQ(a.status, ActionStatus::Proposed);
  EXPECT_EQ(a.proposed_text, "I do not want to see crypto");
  EXPECT_EQ(a.proposed_at, 50);
  EXPECT_TRUE(a.id.empty());
  EXPECT_EQ(gw->chat_calls(), 0u);
  EXPECT_EQ(code_of([&] { propose_action(need("  "), {}, *gw, 0); }), Errc::InvalidArgument);
}

TEST(ProposeAction, VerbatimActiveRuleIsAnUpdateDuplicate) {
  auto gw = fgtest::stub_gateway();
  filter::RuleSet rules;
  rules.add("No football", 1);
  rules.add("I do not want to see  Crypto", 2);
  rules.update_text("r2", "I do not want to see  Crypto");
  const auto a = propose_action(need("i do not want to see crypto"), rules.all(), *gw, 5);
  EXPECT_EQ(a.kind, ActionKind::Update);
  EXPECT_EQ(a.duplicate_of, "r2");
  EXPECT_EQ(a.target_rule_id, "r2");
  EXPECT_EQ(a.target_version, 2u);
  EXPECT_EQ(a.proposed_text, "I do not want to see  Crypto");
  EXPECT_EQ(gw->chat_calls(), 0u);

  rules.set_active("r2", false);
  auto inactive = propose_action(need("i do not want to see crypto"), rules.all(), *gw, 5);
  EXPECT_EQ(inactive.kind, ActionKind::Add);
  EXPECT_FALSE(inactive.duplicate_of);
}

TEST(ProposeAction, RelatedRuleBecomesAnUpdate) {
  std::string prompt;
  auto gw = fgtest::stub_gateway(relevance_stub(
      R"({"related_rule_id": "r1", "merged_text": " I do not want to see football or basketball "})", &prompt));
  filter::RuleSet rules;
  rules.add("I do not want to see football", 1);
  const auto a = propose_action(need("I do not want to see basketball"), rules.all(), *gw, 9);
  EXPECT_EQ(a.kind, ActionKind::Update);
  EXPECT_EQ(a.target_rule_id, "r1");
  EXPECT_EQ(a.target_version, 1u);
  EXPECT_FALSE(a.duplicate_of);
  EXPECT_EQ(a.proposed_text, "I do not want to see football or basketball");
  EXPECT_TRUE(text::contains(prompt, "[r1] I do not want to see football"));
}

TEST(ProposeAction, UnrelatedNeedIsAnAdd) {
  auto gw = fgtest::stub_gateway();
  filter::RuleSet rules;
  rules.add("I do not want to see football", 1);
  const auto a = propose_action(need("I do not want to see crypto"), rules.all(), *gw, 9);
  EXPECT_EQ(a.kind, ActionKind::Add);
  EXPECT_EQ(gw->chat_calls(), 1u);
}

TEST(ProposeAction, UnlistedRuleIdIsASchemaViolation) {
  auto gw = fgtest::stub_gateway(relevance_stub(R"({"related_rule_id": "r9", "merged_text": "x"})"));
  filter::RuleSet rules;
  rules.add("I do not want to see football", 1);
  EXPECT_EQ(code_of([&] { propose_action(need("I do not want to see crypto"), rules.all(), *gw, 0); }),
            Errc::SchemaViolation);
}

TEST(ProposeAction, ListsOnlyTheNewestRules) {
  std::string prompt;
  auto gw = fgtest::stub_gateway(
      relevance_stub(R"({"related_rule_id": null, "merged_text": null})", &prompt));
  filter::RuleSet rules;
  for (int i = 0; i < 60; ++i) rules.add("Rule number " + std::to_string(i), i);
  propose_action(need("I do not want to see crypto"), rules.all(), *gw, 0);
  EXPECT_FALSE(text::contains(prompt, "[r10] "));
  EXPECT_TRUE(text::contains(prompt, "[r11] Rule number 10"));
  EXPECT_TRUE(text::contains(prompt, "[r60] Rule number 59"));
}

TEST(ApplyAction, ConfirmedAddCreatesActiveRuleWithEditedText) {
  filter::RuleSet rules;
  ManagementAction a;
  a.id = "a1";
  a.proposed_text = "I do not want to see crypto";
  apply_action(rules, a, "  No crypto or stocks ", true, 77);
  EXPECT_EQ(a.status, ActionStatus::Confirmed);
  EXPECT_EQ(a.final_text, "No crypto or stocks");
  EXPECT_EQ(a.result_rule_id, "r1");
  EXPECT_EQ(a.resolved_at, 77);
  EXPECT_TRUE(rules.get("r1").active);
  EXPECT_EQ(rules.get("r1").text, "No crypto or stocks");
  EXPECT_EQ(code_of([&] { apply_action(rules, a, "x", true, 78); }), Errc::StaleAction);
}

TEST(ApplyAction, RejectLeavesRulesAlone) {
  filter::RuleSet rules;
  rules.add("No football", 1);
  ManagementAction a;
  a.id = "a1";
  apply_action(rules, a, "", false, 5);
  EXPECT_EQ(a.status, ActionStatus::Rejected);
  EXPECT_EQ(a.resolved_at, 5);
  EXPECT_FALSE(a.final_text);
  EXPECT_EQ(rules.all().size(), 1u);
}

TEST(ApplyAction, UpdateChecksTargetIsUnchanged) {
  filter::RuleSet rules;
  rules.add("No football", 1);
  auto make = [] {
    ManagementAction a;
    a.id = "a1";
    a.kind = ActionKind::Update;
    a.target_rule_id = "r1";
    a.target_version = 1;
    return a;
  };
  auto blank = make();
  EXPECT_EQ(code_of([&] { apply_action(rules, blank, " ", true, 1); }), Errc::InvalidArgument);
  EXPECT_EQ(blank.status, ActionStatus::Proposed);

  auto ok = make();
  apply_action(rules, ok, "No football or rugby", true, 2);
  EXPECT_EQ(rules.get("r1").text, "No football or rugby");
  EXPECT_EQ(rules.get("r1").version, 2u);
  EXPECT_EQ(ok.result_rule_id, "r1");

  auto stale = make();
  EXPECT_EQ(code_of([&] { apply_action(rules, stale, "x", true, 3); }), Errc::StaleAction);
  rules.remove("r1");
  auto gone = make();
  gone.target_version = 2;
  EXPECT_EQ(code_of([&] { apply_action(rules, gone, "x", true, 3); }), Errc::StaleAction);
}

TEST(AcceptanceRate, ConfirmedOverProposed) {
  EXPECT_FALSE(acceptance_rate({}));
  std::vector<ManagementAction> v(4);
  v[0].status = ActionStatus::Confirmed;
  v[1].status = ActionStatus::Rejected;
  v[2].status = ActionStatus::Confirmed;
  EXPECT_DOUBLE_EQ(*acceptance_rate(v), 0.5);
}

TEST(ManagementAction, JsonRoundTrip) {
  ManagementAction a;
  a.id = "a3";
  a.kind = ActionKind::Update;
  a.target_rule_id = "r2";
  a.target_version = 4;
  a.proposed_text = "p";
  a.status = ActionStatus::Confirmed;
  a.need = need("n");
  a.duplicate_of = "r2";
  a.proposed_at = 1;
  a.final_text = "f";
  a.result_rule_id = "r2";
  a.resolved_at = 2;
  EXPECT_EQ(ManagementAction::from_json(a.to_json()), a);
  ManagementAction add;
  add.id = "a4";
  EXPECT_EQ(ManagementAction::from_json(add.to_json()), add);
  auto broken = a.to_json();
  broken["target_rule_id"] = nullptr;
  EXPECT_EQ(code_of([&] { ManagementAction::from_json(broken); }), Errc::InvalidArgument);
}
