#include "feedguard/llm/http_backend.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "feedguard/common/error.hpp"

namespace feedguard::llm {

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url)) {
    throw Error(Errc::InvalidArgument, "bad base URL: " + config_.base_url);
  }
  origin_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : "";
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config_.model.empty()) throw Error(Errc::InvalidArgument, "http backend needs a model name");
}

json HttpBackend::chat_body(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
  }
  json body{{"model", config_.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"seed", request.seed}};
  if (request.schema_ref) body["response_format"] = {{"type", "json_object"}};
  return body;
}

json HttpBackend::post(const std::string& path, const json& body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto result = client.Post(path_prefix_ + path, headers, body.dump(), "application/json");
  if (!result) {
    throw Error(Errc::Transport,
                "request to " + origin_ + path_prefix_ + path + " failed: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(Errc::Transport,
                "HTTP " + std::to_string(result->status) + " from " + path + ": " + result->body.substr(0, 200));
  }
  auto parsed = json::parse(result->body, nullptr, false);
  if (parsed.is_discarded()) throw Error(Errc::Transport, "response from " + path + " was not JSON");
  return parsed;
}

std::string HttpBackend::chat(const ChatRequest& request) {
  const json reply = post("/chat/completions", chat_body(request));
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::Transport, std::string("unexpected chat response shape: ") + e.what());
  }
}

std::vector<double> HttpBackend::embed(std::string_view text) {
  const std::string model = config_.embedding_model.empty() ? config_.model : config_.embedding_model;
  const json reply = post("/embeddings", json{{"model", model}, {"input", std::string(text)}});
  try {
    return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(Errc::Transport, std::string("unexpected embedding response shape: ") + e.what());
  }
}

}  // namespace feedguard::llm
