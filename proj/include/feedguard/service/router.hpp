#pragma once

#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "feedguard/common/error.hpp"
#include "feedguard/service/app.hpp"

namespace feedguard::service {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

/// Header carrying a client-chosen id that makes a mutating request safe to
/// retry: a repeated id gets the first response back without running again.
inline constexpr const char* kRequestIdHeader = "X-Request-Id";

/// Environment variable holding the optional static API token.
inline constexpr const char* kTokenEnv = "FEEDGUARD_API_TOKEN";

/// HTTP status for an error code.
int http_status(Errc code);

/// {"error": {"code", "message", "details"}}
nlohmann::json api_error(const std::string& code, const std::string& message,
                         nlohmann::json details = nlohmann::json::object());

/// Transport-independent request dispatch.
class Router {
 public:
  /// With a non-empty token every route except /health requires
  /// "Authorization: Bearer <token>".
  explicit Router(App& app, std::string token = {}) : app_(app), token_(std::move(token)) {}

  HttpResponse handle(const HttpRequest& request);

 private:
  HttpResponse dispatch(const HttpRequest& request);

  App& app_;
  std::string token_;
  std::mutex replay_mutex_;
  std::map<std::string, HttpResponse> replies_;
};

}  // namespace feedguard::service
