#include "support.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "feedguard/common/error.hpp"

namespace feedguard::fgtest {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path data_dir() { return FEEDGUARD_TEST_DATA_DIR; }

TempDir::TempDir() {
  static std::uint64_t counter = 0;
  const auto base = fs::temp_directory_path();
  Rng rng(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
  for (;;) {
    auto candidate = base / fmt::format("feedguard-test-{}-{}", rng.next() % 1'000'000'000, ++counter);
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::shared_ptr<llm::StubBackend> bundled_stub() {
  auto backend = std::make_shared<llm::StubBackend>();
  backend->load_directory(data_dir() / "stub_scripts");
  return backend;
}

std::shared_ptr<llm::Gateway> stub_gateway(std::shared_ptr<llm::StubBackend> backend) {
  llm::GatewayOptions options;
  options.retry_backoff = std::chrono::milliseconds(0);
  return std::make_shared<llm::Gateway>(std::move(backend), options);
}

llm::Embedding unit_vector(std::size_t dimension, std::size_t axis) {
  std::vector<double> v(dimension, 0.0);
  v.at(axis) = 1.0;
  return llm::normalized(std::move(v));
}

profile::Item item(const std::string& id, const std::string& title, const std::string& summary) {
  profile::Item it;
  it.id = id;
  it.title = title;
  it.summary = summary;
  return it;
}

profile::Impression impression(const std::string& id, const std::string& user,
                               const std::vector<std::pair<std::string, bool>>& titles, Timestamp ts) {
  profile::Impression imp;
  imp.impression_id = id;
  imp.user_id = user;
  imp.timestamp = ts;
  std::size_t n = 0;
  for (const auto& [title, clicked] : titles) {
    imp.displayed.push_back({item(fmt::format("{}-{}", id, ++n), title), clicked});
  }
  return imp;
}

std::vector<json> demo_impressions() {
  std::ifstream in(data_dir() / "demo" / "impressions.jsonl");
  if (!in) throw std::runtime_error("demo impressions missing");
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

json demo_feed() {
  std::ifstream in(data_dir() / "demo" / "feed.json");
  if (!in) throw std::runtime_error("demo feed missing");
  return json::parse(in);
}

graph::PreferenceGraph random_graph(Rng& rng, std::size_t max_nodes, std::size_t max_edges) {
  graph::PreferenceGraph g;
  const auto n = 1 + rng.uniform_index(max_nodes);
  std::vector<graph::FeatureId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    // Coarse timestamps so created_at ties occur and the id tie-break matters.
    ids.push_back(g.upsert_feature(fmt::format("feature {}", i), unit_vector(4, i % 4),
                                   static_cast<Timestamp>(rng.uniform_index(5))));
  }
  if (n < 2) return g;
  const auto m = rng.uniform_index(max_edges + 1);
  for (std::size_t e = 0; e < m; ++e) {
    const auto a = rng.uniform_index(n);
    auto b = rng.uniform_index(n - 1);
    if (b >= a) ++b;
    g.add_preference_edge(ids[a], ids[b]);
  }
  return g;
}

std::map<std::string, double> dense_pagerank(const graph::PreferenceGraph& graph, double damping) {
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  for (const auto& [id, node] : graph.nodes()) {
    index[id] = ids.size();
    ids.push_back(id);
  }
  const auto n = ids.size();
  if (n == 0) return {};

  // Column-stochastic transition matrix P; dangling columns are uniform.
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  std::vector<double> out_weight(n, 0.0);
  for (const auto& [edge, w] : graph.edges()) out_weight[index[edge.first]] += static_cast<double>(w);
  for (const auto& [edge, w] : graph.edges()) {
    p[index[edge.second]][index[edge.first]] += static_cast<double>(w) / out_weight[index[edge.first]];
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (out_weight[j] == 0.0) {
      for (std::size_t i = 0; i < n; ++i) p[i][j] = 1.0 / static_cast<double>(n);
    }
  }

  // (I - d P) x = (1 - d) / n
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - damping * p[i][j];
    a[i][n] = (1.0 - damping) / static_cast<double>(n);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::map<std::string, double> out;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += a[i][n] / a[i][i];
  for (std::size_t i = 0; i < n; ++i) out[ids[i]] = a[i][n] / a[i][i] / total;
  return out;
}

double l1_distance(const graph::RankedFeatures& ranked, const std::map<std::string, double>& oracle) {
  if (ranked.entries.size() != oracle.size()) return INFINITY;
  double d = 0.0;
  for (const auto& e : ranked.entries) {
    auto it = oracle.find(e.id);
    if (it == oracle.end()) return INFINITY;
    d += std::abs(e.score - it->second);
  }
  return d;
}

service::AppOptions deterministic_options(std::uint64_t seed) {
  service::AppOptions options;
  options.builder.seed = seed;
  options.store.sync = false;
  options.store.snapshot_interval = 16;
  return options;
}

std::shared_ptr<Clock> fixed_clock() { return std::make_shared<SteppingClock>(1'750'000'000'000, 1000); }

void run_e2e_scenario(service::App& app) {
  for (const auto& imp : demo_impressions()) app.ingest_impression(imp);
  app.create_rule({{"text", "I do not want to see basketball or football"}});
  app.create_rule({{"text", "No celebrity gossip please"}});
  app.filter_feed(demo_feed());
  const auto opened = app.open_conversation({{"strategy", "profile"}});
  const auto id = opened["conversation"]["id"].get<std::string>();
  app.post_message(id, {{"text", "Which features do I like the most?"}});
  const auto reply = app.post_message(id, {{"text", "I do not want to see crypto and stocks questions"}});
  if (reply["action"].is_null()) throw std::runtime_error("scenario expected a proposed action");
  app.confirm_action(reply["action"]["id"].get<std::string>(),
                     {{"confirmed", true}, {"editedText", "I do not want to see crypto or stock trading"}});
}

std::vector<std::function<void(service::App&)>> event_script() {
  using Step = std::function<void(service::App&)>;
  static const std::vector<std::string> topics{"football", "crypto",  "celebrity", "airlines", "baking",
                                               "genetics", "podcasts", "mortgage",  "tennis",   "museums"};
  struct Context {
    std::vector<json> impressions = demo_impressions();
    json feed = demo_feed();
    std::size_t next_impression = 0;
    std::string rule_id;
    std::string session_id;
  };
  auto ctx = std::make_shared<Context>();
  std::vector<Step> steps;
  for (std::size_t block = 0; steps.size() < 200; ++block) {
    const auto& topic = topics[block % topics.size()];
    const auto ingest = [ctx](service::App& app) { app.ingest_impression(ctx->impressions.at(ctx->next_impression++)); };
    steps.push_back(ingest);
    steps.push_back(ingest);
    steps.push_back([ctx, topic](service::App& app) {
      ctx->rule_id = app.create_rule({{"text", "I do not want to see " + topic + " content"}})["rule"]["id"];
    });
    steps.push_back([ctx, block](service::App& app) {
      json items = json::array();
      for (std::size_t i = 0; i < 5; ++i) items.push_back(ctx->feed["items"].at((block * 5 + i) % 20));
      app.filter_feed({{"items", items}});
    });
    steps.push_back([ctx, topic](service::App& app) {
      app.patch_rule(ctx->rule_id, {{"text", "Hide anything about " + topic}});
    });
    steps.push_back([ctx](service::App& app) { app.set_rule_active(ctx->rule_id, false); });
    steps.push_back([ctx, block](service::App& app) {
      ctx->session_id = app.open_conversation({{"strategy", block % 2 == 0 ? "profile" : "records"}})["conversation"]["id"];
    });
    steps.push_back([ctx, block](service::App& app) {
      app.post_message(ctx->session_id,
                       {{"text", "I do not want to see " + topics[(block + 3) % topics.size()] + " stories"}});
    });
    if (block % 2 == 0) {
      steps.push_back([ctx](service::App& app) { app.set_rule_active(ctx->rule_id, true); });
    } else {
      steps.push_back([ctx](service::App& app) { app.delete_rule(ctx->rule_id); });
    }
    steps.push_back([block](service::App& app) {
      const auto pending = app.pending_actions()["actions"];
      if (pending.empty()) throw std::runtime_error("script expected a pending action");
      app.confirm_action(pending[0]["id"], {{"confirmed", block % 3 != 2}});
    });
    steps.push_back([ctx](service::App& app) { app.close_conversation(ctx->session_id); });
  }
  steps.resize(200);
  return steps;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace feedguard::fgtest
