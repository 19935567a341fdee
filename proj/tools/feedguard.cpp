#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/eval/mind.hpp"
#include "feedguard/eval/planted.hpp"
#include "feedguard/eval/proxy.hpp"
#include "feedguard/llm/stub_backend.hpp"
#include "feedguard/service/app.hpp"
#include "feedguard/service/config.hpp"
#include "feedguard/service/router.hpp"
#include "feedguard/service/server.hpp"
#include "feedguard/store/repository.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace feedguard;

namespace {

const fs::path kBundledData = FEEDGUARD_DATA_DIR;

std::shared_ptr<llm::Gateway> gateway_from(const std::string& config_file) {
  if (config_file.empty()) {
    service::GatewayConfig config;
    config.stub_scripts = kBundledData / "stub_scripts";
    config.options.retry_backoff = std::chrono::milliseconds(0);
    return service::make_gateway(config);
  }
  return service::make_gateway(service::load_gateway_config(config_file));
}

std::shared_ptr<Clock> clock_from(std::int64_t start) {
  if (start > 0) return std::make_shared<SteppingClock>(start);
  return std::make_shared<SystemClock>();
}

json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, file.string() + ": " + e.what());
  }
}

void write_file(const fs::path& file, const std::string& content) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(Errc::MissingFile, "cannot write " + file.string());
  out << content;
}

std::vector<eval::Method> parse_methods(const std::vector<std::string>& names) {
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    return {eval::kAllMethods.begin(), eval::kAllMethods.end()};
  }
  std::vector<eval::Method> out;
  for (const auto& n : names) out.push_back(eval::method_from_string(n));
  return out;
}

struct ProxyArgs {
  std::string dataset;
  std::size_t k = 4;
  std::vector<std::string> methods;
  std::string backend = "stub";
  std::string gateway_config;
  std::uint64_t seed = 0;
  std::uint64_t quota = 10000;
  std::size_t max_users = 0;
  std::string out = "proxy-accuracy.csv";
};

int run_eval_proxy(const ProxyArgs& args) {
  const auto methods = parse_methods(args.methods);
  auto config = args.gateway_config.empty() ? service::GatewayConfig{}
                                            : service::load_gateway_config(args.gateway_config);
  config.backend = args.backend;
  if (config.backend == "stub" && config.stub_scripts.empty()) config.stub_scripts = kBundledData / "stub_scripts";
  auto gateway = service::make_gateway(config);

  const auto dataset = eval::load_mind(args.dataset);
  const auto cohorts = eval::bucket_users(dataset, args.quota, args.seed);
  eval::ProxyOptions options;
  options.k = args.k;
  options.seed = args.seed;

  const fs::path out_file(args.out);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  auto traces_file = out_file;
  traces_file.replace_extension(".traces.jsonl");
  std::ofstream traces(traces_file, std::ios::binary);
  std::vector<eval::AccuracyRow> rows;
  for (const auto method : methods) {
    eval::AccuracyRow total{std::string(eval::to_string(method)), "all"};
    for (const auto& cohort : cohorts) {
      if (cohort.users.empty()) continue;
      eval::AccuracyRow row{std::string(eval::to_string(method)), cohort.bucket.label()};
      std::size_t used = 0;
      for (const auto& user : cohort.users) {
        if (args.max_users > 0 && used++ >= args.max_users) break;
        auto trace = eval::run_proxy(user, eval::impressions_of(dataset, user), method, *gateway, options);
        auto j = trace.to_json();
        j["bucket"] = cohort.bucket.label();
        traces << j.dump() << '\n';
        row.users += 1;
        row.trials += trace.steps.size();
        row.correct += trace.correct();
        row.flagged += trace.flagged();
      }
      total.users += row.users;
      total.trials += row.trials;
      total.correct += row.correct;
      total.flagged += row.flagged;
      spdlog::info("{} {}: {}/{} correct", row.method, row.bucket, row.correct, row.trials);
      rows.push_back(std::move(row));
    }
    rows.push_back(std::move(total));
  }
  const auto csv = eval::accuracy_csv(rows);
  write_file(out_file, csv);
  std::cout << csv;
  return 0;
}

struct PlantedArgs {
  std::uint64_t seed = 0;
  std::size_t impressions = 200;
  std::size_t features = 8;
  std::size_t k = 4;
  std::string out;
};

int run_eval_planted(const PlantedArgs& args) {
  eval::PlantedOptions options;
  options.seed = args.seed;
  options.impressions = args.impressions;
  options.content_features = args.features;
  auto world = std::make_shared<const eval::PlantedWorld>(eval::make_planted_world(options));

  std::vector<eval::AccuracyRow> rows;
  for (const auto method : eval::kAllMethods) {
    auto backend = std::make_shared<llm::StubBackend>();
    eval::install_planted_handlers(*backend, world);
    llm::Gateway gateway(backend);
    eval::ProxyOptions proxy;
    proxy.k = args.k;
    proxy.seed = args.seed;
    const auto start = std::chrono::steady_clock::now();
    auto trace = eval::run_proxy(world->user_id, world->impressions, method, gateway, proxy);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    spdlog::info("planted {}: accuracy {:.3f} in {:.2f} s", eval::to_string(method), trace.accuracy, elapsed);
    rows.push_back({std::string(eval::to_string(method)), "planted", 1, trace.steps.size(), trace.correct(),
                    trace.flagged()});
  }
  const auto csv = eval::accuracy_csv(rows);
  if (!args.out.empty()) write_file(args.out, csv);
  std::cout << csv;
  return 0;
}

int run_ingest(const std::string& data_dir, const std::string& file, const std::string& gateway_config,
               std::int64_t clock_start) {
  service::App app(data_dir, gateway_from(gateway_config), clock_from(clock_start));
  std::ifstream in(file);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + file);
  std::string line;
  std::size_t ingested = 0;
  std::size_t duplicates = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json body;
    try {
      body = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedInput, fmt::format("{}:{}: {}", file, lineno, e.what()));
    }
    auto result = app.ingest_impression(body);
    if (result.value("duplicate", false)) {
      ++duplicates;
    } else {
      ++ingested;
    }
  }
  const auto profile = app.profile();
  std::cout << json{{"ingested", ingested}, {"duplicates", duplicates}, {"profile", profile}}.dump(2) << '\n';
  return 0;
}

int run_filter(const std::string& data_dir, const std::string& feed, const std::string& out,
               const std::string& gateway_config, std::int64_t clock_start) {
  service::App app(data_dir, gateway_from(gateway_config), clock_from(clock_start));
  auto body = read_json_file(feed);
  if (body.is_array()) body = json{{"items", body}};
  const auto result = app.filter_feed(body);
  if (out.empty()) {
    std::cout << result.dump(2) << '\n';
  } else {
    write_file(out, result.dump(2) + "\n");
  }
  return 0;
}

int run_rule_add(const std::string& data_dir, const std::string& text, std::int64_t clock_start) {
  service::App app(data_dir, gateway_from(""), clock_from(clock_start));
  std::cout << app.create_rule(json{{"text", text}}).dump(2) << '\n';
  return 0;
}

int run_check(const std::string& data_dir) {
  const auto loaded = store::load_state(data_dir);
  if (loaded.torn_tail) std::cerr << "warning: the last log line is incomplete and was ignored\n";
  const auto& s = loaded.state;
  std::cout << json{{"last_seq", s.last_seq},
                    {"snapshot_seq", loaded.snapshot_seq ? json(*loaded.snapshot_seq) : json(nullptr)},
                    {"replayed", loaded.replayed},
                    {"profile_version", s.profile.version},
                    {"rules", s.rules.all().size()},
                    {"sessions", s.sessions.size()},
                    {"actions", s.actions.size()},
                    {"filter_records", s.records.size()}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"feedguard: preference profiles, content filtering and filter-need conversations"};
  cli.require_subcommand(1);
  std::string log_level = "info";
  cli.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  std::string data_dir = store::default_data_dir().string();
  std::string gateway_config;
  std::int64_t clock_start = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data-dir", data_dir, "Event log and snapshot directory");
    sub->add_option("--gateway-config", gateway_config, "Gateway JSON config (default: bundled stub scripts)");
    sub->add_option("--clock-start", clock_start, "Use a logical clock starting at this epoch-ms value");
  };

  auto* serve = cli.add_subcommand("serve", "Run the HTTP API");
  add_common(serve);
  std::string bind = "127.0.0.1";
  int port = 8080;
  serve->add_option("--bind", bind);
  serve->add_option("--port", port);
  std::string token;
  serve->add_option("--token", token, "Require this bearer token on every route but /health")
      ->envname(service::kTokenEnv);

  auto* eval_cmd = cli.add_subcommand("eval", "Offline evaluations");
  eval_cmd->require_subcommand(1);
  ProxyArgs proxy;
  auto* proxy_cmd = eval_cmd->add_subcommand("proxy", "Click-prediction proxy task on a MIND-format dataset");
  proxy_cmd->add_option("--dataset", proxy.dataset, "Directory with news.tsv and behaviors.tsv")->required();
  proxy_cmd->add_option("--k", proxy.k, "Candidates per slate")->check(CLI::Range(2, 64));
  proxy_cmd->add_option("--method", proxy.methods, "full, A, B, C, D or all (repeatable)");
  proxy_cmd->add_option("--backend", proxy.backend)->check(CLI::IsMember({"stub", "http"}));
  proxy_cmd->add_option("--gateway-config", proxy.gateway_config);
  proxy_cmd->add_option("--seed", proxy.seed);
  proxy_cmd->add_option("--quota", proxy.quota, "Clicks drawn per bucket");
  proxy_cmd->add_option("--max-users", proxy.max_users, "Users per bucket (0 = all drawn)");
  proxy_cmd->add_option("--out", proxy.out, "Accuracy CSV; per-user traces go to <name>.traces.jsonl");

  PlantedArgs planted;
  auto* planted_cmd = eval_cmd->add_subcommand("planted", "Synthetic user with known preferences");
  planted_cmd->add_option("--seed", planted.seed);
  planted_cmd->add_option("--impressions", planted.impressions);
  planted_cmd->add_option("--features", planted.features);
  planted_cmd->add_option("--k", planted.k)->check(CLI::Range(2, 6));
  planted_cmd->add_option("--out", planted.out, "CSV output file");

  auto* ingest = cli.add_subcommand("ingest", "Ingest impressions from a JSONL file");
  add_common(ingest);
  std::string ingest_file;
  ingest->add_option("--file", ingest_file)->required();

  auto* filter_cmd = cli.add_subcommand("filter", "Filter a feed against the active rules");
  add_common(filter_cmd);
  std::string feed_file;
  std::string filter_out;
  filter_cmd->add_option("--feed", feed_file, "JSON array of items or {\"items\": [...]}")->required();
  filter_cmd->add_option("--out", filter_out);

  auto* rule_cmd = cli.add_subcommand("add-rule", "Create an active filter rule");
  add_common(rule_cmd);
  std::string rule_text;
  rule_cmd->add_option("text", rule_text)->required();

  auto* check = cli.add_subcommand("check", "Load the event log and print a state summary");
  check->add_option("--data-dir", data_dir);

  CLI11_PARSE(cli, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (serve->parsed()) {
      service::App app(data_dir, gateway_from(gateway_config), clock_from(clock_start));
      service::Router router(app, token);
      service::serve_http(router, bind, port);
      return 0;
    }
    if (proxy_cmd->parsed()) return run_eval_proxy(proxy);
    if (planted_cmd->parsed()) return run_eval_planted(planted);
    if (ingest->parsed()) return run_ingest(data_dir, ingest_file, gateway_config, clock_start);
    if (filter_cmd->parsed()) return run_filter(data_dir, feed_file, filter_out, gateway_config, clock_start);
    if (rule_cmd->parsed()) return run_rule_add(data_dir, rule_text, clock_start);
    if (check->parsed()) return run_check(data_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
