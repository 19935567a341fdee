#include <cmath>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/gateway.hpp"
#include "feedguard/llm/http_backend.hpp"
#include "feedguard/llm/prompts.hpp"
#include "feedguard/llm/rate_limiter.hpp"
#include "feedguard/llm/schema.hpp"
#include "feedguard/llm/stub_backend.hpp"
#include "feedguard/llm/stub_generators.hpp"
#include "support.hpp"

using namespace feedguard;
using namespace feedguard::llm;
using nlohmann::json;

namespace {

class FlakyBackend final : public ChatBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  std::string id() const override { return "flaky"; }
  std::string chat(const ChatRequest&) override {
    ++calls;
    if (calls <= failures_) throw Error(Errc::Transport, "connection reset");
    return "ok";
  }
  std::vector<double> embed(std::string_view) override {
    ++calls;
    if (calls <= failures_) throw Error(Errc::Transport, "connection reset");
    return {3.0, 4.0};
  }
  int calls = 0;

 private:
  int failures_;
};

GatewayOptions no_backoff() {
  GatewayOptions o;
  o.retry_backoff = std::chrono::milliseconds(0);
  return o;
}

}  // namespace

TEST(Prompts, EveryTemplateIsEmbedded) {
  for (const char* key : {"v1/system", "v1/perceive", "v1/perceive_generic", "v1/summary", "v1/reflect_merge",
                          "v1/filter_item_topics", "v1/filter_rule_topics", "v1/filter_verdict", "v1/needs_context",
                          "v1/detect_need", "v1/rule_relevance", "v1/predict", "v1/extract_features",
                          "v1/correction"}) {
    EXPECT_FALSE(prompt_template(key).empty()) << key;
  }
  EXPECT_THROW(prompt_template("v1/nope"), Error);
}

TEST(Prompts, PerceiveTemplateHasEveryBand) {
  const auto& t = prompt_template("v1/perceive");
  for (const char* band : {"Very liked", "Fairly liked", "Neutral", "Fairly disliked", "Very disliked"}) {
    EXPECT_TRUE(text::contains(t, band)) << band;
  }
}

TEST(Schema, ExtractsJsonFromFencesAndProse) {
  auto j = extract_json_object("Sure!\n```json\n{\"index\": 2}\n```\nThanks");
  ASSERT_TRUE(j);
  EXPECT_EQ((*j)["index"], 2);
  EXPECT_FALSE(extract_json_object("no json here"));
  EXPECT_FALSE(extract_json_object("[1, 2]"));
}

TEST(Schema, BuiltinsAcceptValidAndRejectInvalid) {
  const auto reg = SchemaRegistry::builtin();
  const auto* topics = reg.find(schemas::kTopicList);
  ASSERT_NE(topics, nullptr);
  EXPECT_FALSE(topics->check(json{{"topics", {"a", "b"}}}));
  EXPECT_TRUE(topics->check(json{{"topics", "a"}}));
  const auto* verdict = reg.find(schemas::kFilterVerdict);
  EXPECT_FALSE(verdict->check(json{{"filter", true}}));
  EXPECT_TRUE(verdict->check(json{{"filter", "yes"}}));
  const auto* prediction = reg.find(schemas::kPrediction);
  EXPECT_FALSE(prediction->check(json{{"index", 0}}));
  EXPECT_TRUE(prediction->check(json{{"index", -1}}));
  const auto* relevance = reg.find(schemas::kRuleRelevance);
  EXPECT_FALSE(relevance->check(json{{"related_rule_id", nullptr}, {"merged_text", nullptr}}));
  EXPECT_FALSE(relevance->check(json{{"related_rule_id", "r1"}, {"merged_text", "x"}}));
  EXPECT_EQ(reg.find("Nope"), nullptr);
}

TEST(Types, ValidateRejectsBadRequests) {
  ChatRequest empty;
  EXPECT_THROW(validate(empty), Error);
  auto r = single_turn("k", "hello");
  r.temperature = 3.0;
  EXPECT_THROW(validate(r), Error);
  EXPECT_NO_THROW(validate(single_turn("k", "hello")));
}

TEST(Types, CosineAndNormalize) {
  const auto a = normalized({3.0, 4.0});
  EXPECT_NEAR(a.values[0], 0.6, 1e-12);
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine(a, normalized({-4.0, 3.0})), 0.0, 1e-12);
  EXPECT_EQ(cosine(a, normalized({1.0, 0.0, 0.0})), 0.0);
  EXPECT_THROW(normalized({0.0, 0.0}), std::invalid_argument);
}

TEST(StubBackend, ResolutionOrderRulesThenHandlerThenGeneratorThenFallback) {
  StubBackend stub;
  StubScript s;
  s.key = "k";
  s.rules.push_back({{"apple"}, {}, std::nullopt, "rule"});
  s.generator = "no_merge";
  s.fallback = "fallback";
  stub.add_script(s);
  EXPECT_EQ(stub.chat(single_turn("k", "an apple")), "rule");
  EXPECT_EQ(json::parse(stub.chat(single_turn("k", "a pear")))["merge"], false);
  stub.set_handler("k", [](const ChatRequest&) { return std::string("handler"); });
  EXPECT_EQ(stub.chat(single_turn("k", "a pear")), "handler");
  EXPECT_EQ(stub.chat(single_turn("k", "an apple")), "rule");

  StubScript f;
  f.key = "f";
  f.fallback = "fallback";
  stub.add_script(f);
  EXPECT_EQ(stub.chat(single_turn("f", "x")), "fallback");
  try {
    stub.chat(single_turn("missing", "x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoScript);
  }
}

TEST(StubBackend, DigestRulesMatchExactRequests) {
  StubBackend stub;
  const auto req = single_turn("k", "exact", 9);
  StubScript s;
  s.key = "k";
  s.rules.push_back({{}, {}, StubBackend::digest(req), "digest hit"});
  s.fallback = "miss";
  stub.add_script(s);
  EXPECT_EQ(stub.chat(req), "digest hit");
  EXPECT_EQ(stub.chat(single_turn("k", "exact", 10)), "miss");
}

TEST(StubBackend, LoadsScriptFilesAndRejectsBadOnes) {
  fgtest::TempDir dir;
  {
    std::ofstream(dir / "a.json") << R"({"key": "x", "default": {"features": ["a"]}})";
  }
  StubBackend stub;
  stub.load_directory(dir.path());
  EXPECT_EQ(json::parse(stub.chat(single_turn("x", "q")))["features"][0], "a");
  {
    std::ofstream(dir / "b.json") << R"({"nokey": 1})";
  }
  StubBackend bad;
  EXPECT_THROW(bad.load_directory(dir.path()), Error);
  EXPECT_THROW(bad.load_directory(dir / "missing"), Error);
}

TEST(StubBackend, EmbeddingsAreDeterministicAndGroupsAreClose) {
  StubBackend stub;
  stub.add_embedding_group({"deep learning", "neural networks"});
  Gateway gw(std::shared_ptr<ChatBackend>(&stub, [](auto*) {}), no_backoff());
  const auto a = gw.embed("Deep  Learning");
  const auto b = gw.embed("deep learning");
  EXPECT_EQ(a, b);
  double norm = 0.0;
  for (double x : a.values) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_GT(cosine(a, gw.embed("neural networks")), 0.85);
  EXPECT_LT(std::abs(cosine(a, gw.embed("gardening"))), 0.5);
  EXPECT_THROW(gw.embed("   "), Error);
}

TEST(StubGenerators, ContentWordsAndQuotes) {
  EXPECT_EQ(stub::content_words("Why do people like football and the football club?"),
            (std::vector<std::string>{"people", "football", "club"}));
  EXPECT_EQ(stub::first_quoted("titled \"Hello world\" here"), "Hello world");
  EXPECT_FALSE(stub::first_quoted("no quotes"));
}

TEST(StubGenerators, UniformChoiceStaysInRange) {
  std::array<int, 4> counts{};
  for (int seed = 0; seed < 400; ++seed) {
    auto r = single_turn("predict", "[0] \"a\"\n[1] \"b\"\n[2] \"c\"\n[3] \"d\"", seed);
    const auto idx = json::parse(*stub::generate("uniform_choice", r))["index"].get<int>();
    ASSERT_GE(idx, 0);
    ASSERT_LT(idx, 4);
    counts[idx]++;
  }
  for (int c : counts) EXPECT_GT(c, 60);
}

TEST(Gateway, StructuredRetriesWithCorrectionThenSucceeds) {
  auto stub = std::make_shared<StubBackend>();
  int calls = 0;
  std::vector<std::size_t> sizes;
  stub->set_handler("k", [&](const ChatRequest& r) {
    sizes.push_back(r.messages.size());
    return ++calls < 3 ? std::string("not json") : std::string(R"({"topics": ["x"]})");
  });
  Gateway gw(stub, no_backoff());
  const auto resp = gw.complete_structured(single_turn("k", "q"), schemas::kTopicList);
  EXPECT_EQ(resp.attempts, 3);
  EXPECT_EQ((*resp.parsed)["topics"][0], "x");
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 4, 6}));
}

TEST(Gateway, SchemaViolationCarriesRawOutputs) {
  auto stub = std::make_shared<StubBackend>();
  int n = 0;
  stub->set_handler("k", [&](const ChatRequest&) { return "bad " + std::to_string(++n); });
  Gateway gw(stub, no_backoff());
  try {
    gw.complete_structured(single_turn("k", "q"), schemas::kTopicList);
    FAIL();
  } catch (const SchemaViolationError& e) {
    EXPECT_EQ(e.raw_outputs(), (std::vector<std::string>{"bad 1", "bad 2", "bad 3"}));
  }
  EXPECT_EQ(gw.chat_calls(), 3u);
}

TEST(Gateway, ExtraCheckCountsAsSchemaFailure) {
  auto stub = std::make_shared<StubBackend>();
  stub->set_handler("k", [](const ChatRequest&) { return std::string(R"({"index": 9})"); });
  Gateway gw(stub, no_backoff());
  auto check = [](const json& j) -> std::optional<std::string> {
    if (j["index"].get<int>() >= 4) return "index must be below 4";
    return std::nullopt;
  };
  EXPECT_THROW(gw.complete_structured(single_turn("k", "q"), schemas::kPrediction, check), SchemaViolationError);
  EXPECT_THROW(gw.complete_structured(single_turn("k", "q"), "Unknown"), Error);
}

TEST(Gateway, TransportFailuresRetryThreeTimes) {
  auto ok_after_three = std::make_shared<FlakyBackend>(3);
  Gateway gw(ok_after_three, no_backoff());
  EXPECT_EQ(gw.complete(single_turn("k", "q")).text, "ok");
  EXPECT_EQ(ok_after_three->calls, 4);

  auto never = std::make_shared<FlakyBackend>(100);
  Gateway gw2(never, no_backoff());
  try {
    gw2.complete(single_turn("k", "q"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Transport);
  }
  EXPECT_EQ(never->calls, 4);

  auto embed_flaky = std::make_shared<FlakyBackend>(2);
  Gateway gw3(embed_flaky, no_backoff());
  EXPECT_NEAR(gw3.embed("x").values[0], 0.6, 1e-12);
}

TEST(RateLimiter, SpacesAcquisitions) {
  RateLimiter limiter(50.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  EXPECT_GE(ms.count(), 55);
  RateLimiter unlimited(0.0);
  unlimited.acquire();
}

TEST(HttpBackend, TalksToAnOpenAiStyleServer) {
  httplib::Server server;
  json seen;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(json{{"choices", {{{"message", {{"content", "{\"filter\": true}"}}}}}}}.dump(),
                    "application/json");
  });
  server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"data", {{{"embedding", {1.0, 1.0}}}}}}.dump(), "application/json");
  });
  server.Post("/broken/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("FEEDGUARD_TEST_KEY", "secret", 1);
  HttpBackendConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  cfg.model = "m";
  cfg.api_key_env = "FEEDGUARD_TEST_KEY";
  cfg.timeout = std::chrono::seconds(5);
  Gateway gw(std::make_shared<HttpBackend>(cfg), no_backoff());
  const auto resp = gw.complete_structured(single_turn("k", "q", 7), schemas::kFilterVerdict);
  EXPECT_EQ((*resp.parsed)["filter"], true);
  EXPECT_EQ(seen["model"], "m");
  EXPECT_EQ(seen["seed"], 7);
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_NEAR(gw.embed("x").values[0], std::sqrt(0.5), 1e-12);

  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  GatewayOptions one_retry = no_backoff();
  one_retry.transport_retries = 1;
  Gateway broken(std::make_shared<HttpBackend>(cfg), one_retry);
  try {
    broken.complete(single_turn("k", "q"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Transport);
  }
  server.stop();
  t.join();
  EXPECT_THROW(HttpBackend(HttpBackendConfig{"not a url", "m"}), Error);
}
