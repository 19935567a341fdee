#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "feedguard/common/error.hpp"
#include "feedguard/service/app.hpp"
#include "feedguard/service/config.hpp"
#include "feedguard/service/router.hpp"
#include "feedguard/service/server.hpp"
#include "support.hpp"

using namespace feedguard;
using namespace feedguard::service;
using nlohmann::json;
using fgtest::TempDir;

namespace {

struct Fixture {
  TempDir dir;
  App app{dir.path(), fgtest::stub_gateway(), fgtest::fixed_clock(), fgtest::deterministic_options()};
  Router router{app};

  HttpResponse call(const std::string& method, const std::string& path, const json& body = nullptr,
                    std::map<std::string, std::string> headers = {}, std::map<std::string, std::string> query = {}) {
    HttpRequest r;
    r.method = method;
    r.path = path;
    r.body = body.is_null() ? "" : body.dump();
    r.headers = std::move(headers);
    r.query = std::move(query);
    return router.handle(r);
  }
};

}  // namespace

TEST(HttpStatus, MapsErrorCodes) {
  EXPECT_EQ(http_status(Errc::NotFound), 404);
  EXPECT_EQ(http_status(Errc::StaleAction), 409);
  EXPECT_EQ(http_status(Errc::SessionClosed), 409);
  EXPECT_EQ(http_status(Errc::Transport), 503);
  EXPECT_EQ(http_status(Errc::StorageFull), 507);
  EXPECT_EQ(http_status(Errc::CorruptLog), 500);
  EXPECT_EQ(http_status(Errc::InvalidArgument), 400);
  EXPECT_EQ(http_status(Errc::SchemaInvalid), 400);
}

TEST(Router, UnknownRoutesAndMethods) {
  Fixture f;
  auto r = f.call("GET", "/nope");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["error"]["code"], "NotFound");
  EXPECT_TRUE(r.body["error"]["message"].is_string());
  EXPECT_TRUE(r.body["error"]["details"].is_object());
  EXPECT_EQ(f.call("DELETE", "/rules").status, 405);
  EXPECT_EQ(f.call("GET", "/feed/filter").status, 405);
  EXPECT_EQ(f.call("GET", "/health").body["status"], "ok");
}

TEST(Router, RuleLifecycle) {
  Fixture f;
  auto created = f.call("POST", "/rules", {{"text", "No football"}});
  EXPECT_EQ(created.status, 201);
  EXPECT_EQ(created.body["rule"]["id"], "r1");
  EXPECT_EQ(created.body["rule"]["active"], true);

  auto patched = f.call("PATCH", "/rules/r1", {{"text", "No sports"}});
  EXPECT_EQ(patched.status, 200);
  EXPECT_EQ(patched.body["rule"]["text"], "No sports");
  EXPECT_EQ(patched.body["rule"]["version"], 2);

  EXPECT_EQ(f.call("POST", "/rules/r1/deactivate").body["rule"]["active"], false);
  EXPECT_EQ(f.call("POST", "/rules/r1/activate").body["rule"]["active"], true);
  EXPECT_EQ(f.call("GET", "/rules").body["rules"].size(), 1u);

  EXPECT_EQ(f.call("POST", "/rules", {{"text", "   "}}).status, 400);
  EXPECT_EQ(f.call("PATCH", "/rules/r9", {{"text", "x"}}).status, 404);
  EXPECT_EQ(f.router.handle({"POST", "/rules", {}, "{not json", {}}).status, 400);

  EXPECT_EQ(f.call("DELETE", "/rules/r1").body["deleted"], "r1");
  EXPECT_EQ(f.call("DELETE", "/rules/r1").status, 404);
}

TEST(Router, QueryParametersAreValidated) {
  Fixture f;
  auto r = f.call("GET", "/filter-records", nullptr, {}, {{"limit", "ten"}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["code"], "InvalidArgument");
  EXPECT_EQ(f.call("GET", "/filter-records", nullptr, {}, {{"offset", "-1"}}).status, 400);
  auto ok = f.call("GET", "/filter-records", nullptr, {}, {{"limit", "5"}});
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body["limit"], 5);
  EXPECT_EQ(ok.body["total"], 0);
  EXPECT_EQ(f.call("GET", "/filter-stats", nullptr, {}, {{"rule_id", "r1"}}).body["stats"].size(), 0u);
}

TEST(Router, RequestIdReplaysTheFirstResponse) {
  Fixture f;
  const std::map<std::string, std::string> h{{"x-request-id", "abc"}};
  auto first = f.call("POST", "/rules", {{"text", "No football"}}, h);
  auto second = f.call("POST", "/rules", {{"text", "No football"}}, h);
  EXPECT_EQ(first.status, 201);
  EXPECT_EQ(second.status, 201);
  EXPECT_EQ(second.body, first.body);
  EXPECT_EQ(f.app.state().rules.all().size(), 1u);
  f.call("POST", "/rules", {{"text", "No football"}}, {{"X-Request-Id", "def"}});
  EXPECT_EQ(f.app.state().rules.all().size(), 2u);
}

TEST(Router, ImpressionsProfileAndDuplicates) {
  Fixture f;
  const auto imps = fgtest::demo_impressions();
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(f.call("POST", "/events/impression", imps[i]).status, 200);
  auto dup = f.call("POST", "/events/impression", imps[3]);
  EXPECT_EQ(dup.status, 200);
  EXPECT_EQ(dup.body["duplicate"], true);
  EXPECT_EQ(dup.body["ingested"], false);
  const auto seq = f.app.state().last_seq;
  EXPECT_EQ(seq, 10u);

  auto profile = f.call("GET", "/profile");
  EXPECT_EQ(profile.body["version"], 10);
  EXPECT_EQ(profile.body["bands"].size(), 5u);
  auto graph = f.call("GET", "/profile/graph");
  EXPECT_FALSE(graph.body["nodes"].empty());
  double sum = 0.0;
  for (const auto& n : graph.body["nodes"]) sum += n["score"].get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-9);

  EXPECT_EQ(f.call("POST", "/events/impression", {{"impression_id", "x"}}).status, 400);
}

TEST(Router, ConversationToConfirmedRule) {
  Fixture f;
  f.call("POST", "/rules", {{"text", "I do not want to see football"}});
  f.call("POST", "/feed/filter", fgtest::demo_feed());
  auto opened = f.call("POST", "/conversations", {{"strategy", "records"}});
  ASSERT_EQ(opened.status, 201);
  const auto id = opened.body["conversation"]["id"].get<std::string>();
  EXPECT_EQ(f.call("POST", "/conversations", {{"strategy", "both"}}).status, 400);

  auto reply = f.call("POST", "/conversations/" + id + "/messages",
                      {{"text", "I do not want to see crypto and stocks questions"}});
  ASSERT_EQ(reply.status, 200);
  ASSERT_TRUE(reply.body["action"].is_object());
  EXPECT_EQ(reply.body["action"]["kind"], "add");
  const auto action_id = reply.body["action"]["id"].get<std::string>();
  EXPECT_EQ(f.call("GET", "/actions/pending").body["actions"].size(), 1u);

  auto confirmed = f.call("POST", "/actions/" + action_id + "/confirm",
                          {{"confirmed", true}, {"editedText", "No crypto or stocks"}});
  EXPECT_EQ(confirmed.status, 200);
  EXPECT_EQ(confirmed.body["action"]["status"], "confirmed");
  EXPECT_EQ(confirmed.body["rule"]["text"], "No crypto or stocks");
  auto again = f.call("POST", "/actions/" + action_id + "/confirm", {{"confirmed", true}});
  EXPECT_EQ(again.status, 409);
  EXPECT_EQ(again.body["error"]["code"], "StaleAction");
  EXPECT_TRUE(f.call("GET", "/actions/pending").body["actions"].empty());

  EXPECT_EQ(f.call("POST", "/conversations/" + id + "/close").body["conversation"]["status"], "closed");
  EXPECT_EQ(f.call("POST", "/conversations/" + id + "/messages", {{"text", "hi"}}).status, 409);
  EXPECT_EQ(f.call("GET", "/conversations/zzz").status, 404);
}

TEST(Router, StaleUpdateIsAConflict) {
  Fixture f;
  f.call("POST", "/rules", {{"text", "I do not want to see crypto"}});
  auto opened = f.call("POST", "/conversations", {{"strategy", "profile"}});
  const auto id = opened.body["conversation"]["id"].get<std::string>();
  auto reply = f.call("POST", "/conversations/" + id + "/messages", {{"text", "I do not want to see crypto"}});
  ASSERT_TRUE(reply.body["action"].is_object());
  EXPECT_EQ(reply.body["action"]["kind"], "update");
  EXPECT_EQ(reply.body["action"]["duplicate_of"], "r1");
  f.call("PATCH", "/rules/r1", {{"text", "No crypto at all"}});
  auto stale = f.call("POST", "/actions/" + reply.body["action"]["id"].get<std::string>() + "/confirm",
                      {{"confirmed", true}});
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(f.app.state().rules.get("r1").text, "No crypto at all");
}

TEST(GatewayConfig, ParsesAndRejectsUnknownBackends) {
  const auto cfg = GatewayConfig::from_json(
      {{"backend", "http"}, {"base_url", "http://localhost:1"}, {"model", "m"}, {"timeout_seconds", 5}});
  EXPECT_EQ(cfg.backend, "http");
  EXPECT_EQ(cfg.timeout_seconds, 5);
  auto bad = GatewayConfig{};
  bad.backend = "carrier-pigeon";
  EXPECT_THROW(make_gateway(bad), Error);
  TempDir dir;
  try {
    load_gateway_config(dir / "missing.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingFile);
  }
  const auto bundled = load_gateway_config(fgtest::data_dir() / "gateway.stub.json");
  EXPECT_EQ(bundled.backend, "stub");
}

TEST(HttpServer, ServesTheRouterOverHttp) {
  Fixture f;
  HttpServer server(f.router);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.run(); });

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");

  auto created = client.Post("/rules", R"({"text": "No football"})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  auto records = client.Get("/filter-records?limit=abc");
  ASSERT_TRUE(records);
  EXPECT_EQ(records->status, 400);
  EXPECT_EQ(json::parse(records->body)["error"]["code"], "InvalidArgument");
  auto missing = client.Get("/nothing-here");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto put = client.Put("/rules", "{}", "application/json");
  ASSERT_TRUE(put);
  EXPECT_EQ(put->status, 405);
  const httplib::Headers id{{"X-Request-Id", "once"}};
  auto first = client.Post("/rules", id, R"({"text": "No gossip"})", "application/json");
  auto retry = client.Post("/rules", id, R"({"text": "No gossip"})", "application/json");
  ASSERT_TRUE(first && retry);
  EXPECT_EQ(first->body, retry->body);
  EXPECT_EQ(f.app.state().rules.all().size(), 2u);

  server.stop();
  thread.join();
}

TEST(Router, StaticTokenGuardsEveryRouteButHealth) {
  TempDir dir;
  App app(dir.path(), fgtest::stub_gateway(), fgtest::fixed_clock(), fgtest::deterministic_options());
  Router router(app, "s3cret");
  EXPECT_EQ(router.handle({"GET", "/health", {}, "", {}}).status, 200);
  const auto denied = router.handle({"GET", "/rules", {}, "", {}});
  EXPECT_EQ(denied.status, 401);
  EXPECT_EQ(denied.body["error"]["code"], "Unauthorized");
  EXPECT_EQ(router.handle({"GET", "/rules", {}, "", {{"Authorization", "Bearer nope"}}}).status, 401);
  EXPECT_EQ(router.handle({"GET", "/rules", {}, "", {{"authorization", "Bearer s3cret"}}}).status, 200);
}
