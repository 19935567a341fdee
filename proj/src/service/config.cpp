#include "feedguard/service/config.hpp"

#include <fstream>

#include "feedguard/common/error.hpp"
#include "feedguard/llm/http_backend.hpp"
#include "feedguard/llm/stub_backend.hpp"

namespace feedguard::service {

GatewayConfig GatewayConfig::from_json(const nlohmann::json& j) {
  GatewayConfig c;
  try {
    c.backend = j.value("backend", c.backend);
    if (j.contains("stub_scripts")) c.stub_scripts = j["stub_scripts"].get<std::string>();
    c.base_url = j.value("base_url", c.base_url);
    c.model = j.value("model", c.model);
    c.embedding_model = j.value("embedding_model", c.embedding_model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.options.requests_per_second = j.value("requests_per_second", c.options.requests_per_second);
    c.options.transport_retries = j.value("transport_retries", c.options.transport_retries);
    c.options.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", 250));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad gateway config: ") + e.what());
  }
  return c;
}

GatewayConfig load_gateway_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::MissingFile, "missing gateway config " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedInput, file.string() + ": " + e.what());
  }
  auto config = GatewayConfig::from_json(j.contains("gateway") ? j["gateway"] : j);
  if (!config.stub_scripts.empty() && config.stub_scripts.is_relative()) {
    config.stub_scripts = file.parent_path() / config.stub_scripts;
  }
  return config;
}

std::shared_ptr<llm::Gateway> make_gateway(const GatewayConfig& config) {
  std::shared_ptr<llm::ChatBackend> backend;
  if (config.backend == "stub") {
    auto stub = std::make_shared<llm::StubBackend>();
    if (!config.stub_scripts.empty()) stub->load_directory(config.stub_scripts);
    backend = std::move(stub);
  } else if (config.backend == "http") {
    llm::HttpBackendConfig http;
    http.base_url = config.base_url;
    http.model = config.model;
    http.embedding_model = config.embedding_model;
    http.api_key_env = config.api_key_env;
    http.timeout = std::chrono::seconds(config.timeout_seconds);
    backend = std::make_shared<llm::HttpBackend>(std::move(http));
  } else {
    throw Error(Errc::InvalidArgument, "unknown backend \"" + config.backend + "\"; use stub or http");
  }
  return std::make_shared<llm::Gateway>(std::move(backend), config.options);
}

}  // namespace feedguard::service
