#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "feedguard/llm/gateway.hpp"

namespace feedguard::service {

/// Gateway settings, read from JSON:
/// {
///   "backend": "stub" | "http",
///   "stub_scripts": "<dir of stub script files>",        (stub)
///   "base_url": "...", "model": "...", "embedding_model": "...",
///   "api_key_env": "FEEDGUARD_API_KEY", "timeout_seconds": 60,  (http)
///   "requests_per_second": 0, "transport_retries": 3, "retry_backoff_ms": 250
/// }
struct GatewayConfig {
  std::string backend = "stub";
  std::filesystem::path stub_scripts;
  std::string base_url;
  std::string model;
  std::string embedding_model;
  std::string api_key_env = "FEEDGUARD_API_KEY";
  int timeout_seconds = 60;
  llm::GatewayOptions options;

  static GatewayConfig from_json(const nlohmann::json& j);
};

/// Reads a JSON file holding either a gateway object or {"gateway": {...}}.
/// Throws Error(MissingFile) / Error(MalformedInput).
GatewayConfig load_gateway_config(const std::filesystem::path& file);

/// Builds the backend and gateway. Throws Error(InvalidArgument) for an
/// unknown backend name.
std::shared_ptr<llm::Gateway> make_gateway(const GatewayConfig& config);

}  // namespace feedguard::service
