#include "feedguard/service/router.hpp"

#include <charconv>

#include <spdlog/spdlog.h>

#include "feedguard/common/text.hpp"

namespace feedguard::service {

using nlohmann::json;

namespace {

struct RouteError : std::runtime_error {
  RouteError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

std::vector<std::string> segments(const std::string& path) {
  std::vector<std::string> out;
  for (auto& s : text::split(path, '/')) {
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

json parse_body(const HttpRequest& request) {
  if (text::trim(request.body).empty()) return json::object();
  try {
    return json::parse(request.body);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::optional<std::string> header(const HttpRequest& request, std::string_view name) {
  for (const auto& [k, v] : request.headers) {
    if (text::normalize(k) == text::normalize(name)) return v;
  }
  return std::nullopt;
}

std::optional<std::string> query_param(const HttpRequest& request, const char* key) {
  auto it = request.query.find(key);
  if (it == request.query.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> query_number(const HttpRequest& request, const char* key) {
  auto raw = query_param(request, key);
  if (!raw) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), value);
  if (ec != std::errc() || ptr != raw->data() + raw->size()) {
    throw Error(Errc::InvalidArgument, std::string("query parameter ") + key + " must be a non-negative integer");
  }
  return value;
}

[[noreturn]] void wrong_method(const HttpRequest& request) {
  throw RouteError(405, "MethodNotAllowed", request.method + " is not supported on " + request.path);
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::NotFound: return 404;
    case Errc::StaleAction:
    case Errc::SessionClosed:
    case Errc::InactiveRule:
    case Errc::DuplicateImpression: return 409;
    case Errc::Transport:
    case Errc::NoScript:
    case Errc::SchemaViolation:
    case Errc::UnknownSchema:
    case Errc::DecisionUnavailable: return 503;
    case Errc::StorageFull: return 507;
    case Errc::CorruptLog: return 500;
    default: return 400;
  }
}

json api_error(const std::string& code, const std::string& message, json details) {
  return {{"error", {{"code", code}, {"message", message}, {"details", std::move(details)}}}};
}

HttpResponse Router::handle(const HttpRequest& request) {
  if (!token_.empty() && request.path != "/health") {
    const auto auth = header(request, "Authorization");
    if (!auth || *auth != "Bearer " + token_) {
      return {401, api_error("Unauthorized", "missing or wrong bearer token")};
    }
  }
  const auto request_id = header(request, kRequestIdHeader);
  const bool mutating = request.method != "GET" && request.method != "HEAD";
  std::unique_lock<std::mutex> replay_lock(replay_mutex_, std::defer_lock);
  std::string key;
  if (mutating && request_id && !request_id->empty()) {
    key = request.method + " " + request.path + " " + *request_id;
    replay_lock.lock();
    if (auto it = replies_.find(key); it != replies_.end()) return it->second;
  }

  HttpResponse response;
  try {
    response = dispatch(request);
  } catch (const RouteError& e) {
    response = {e.status, api_error(e.code, e.what())};
  } catch (const DanglingRefError& e) {
    response = {http_status(e.code()), api_error(std::string(to_string(e.code())), e.what(), {{"ids", e.ids()}})};
  } catch (const SchemaViolationError& e) {
    response = {http_status(e.code()),
                api_error(std::string(to_string(e.code())), e.what(), {{"raw_outputs", e.raw_outputs()}})};
  } catch (const Error& e) {
    response = {http_status(e.code()), api_error(std::string(to_string(e.code())), e.what())};
  } catch (const std::exception& e) {
    spdlog::error("{} {} failed: {}", request.method, request.path, e.what());
    response = {500, api_error("Internal", e.what())};
  }
  if (!key.empty() && response.status < 500) replies_.emplace(key, response);
  return response;
}

HttpResponse Router::dispatch(const HttpRequest& request) {
  const auto seg = segments(request.path);
  const auto& m = request.method;
  const auto n = seg.size();
  auto ok = [](json body) { return HttpResponse{200, std::move(body)}; };
  auto created = [](json body) { return HttpResponse{201, std::move(body)}; };

  if (n == 1 && seg[0] == "health") {
    if (m != "GET") wrong_method(request);
    return ok(app_.health());
  }
  if (n == 2 && seg[0] == "events" && seg[1] == "impression") {
    if (m != "POST") wrong_method(request);
    return ok(app_.ingest_impression(parse_body(request)));
  }
  if (n == 2 && seg[0] == "feed" && seg[1] == "filter") {
    if (m != "POST") wrong_method(request);
    return ok(app_.filter_feed(parse_body(request)));
  }
  if (n >= 1 && seg[0] == "rules") {
    if (n == 1) {
      if (m == "GET") return ok(app_.list_rules());
      if (m == "POST") return created(app_.create_rule(parse_body(request)));
      wrong_method(request);
    }
    if (n == 2) {
      if (m == "PATCH") return ok(app_.patch_rule(seg[1], parse_body(request)));
      if (m == "DELETE") return ok(app_.delete_rule(seg[1]));
      wrong_method(request);
    }
    if (n == 3 && (seg[2] == "activate" || seg[2] == "deactivate")) {
      if (m != "POST") wrong_method(request);
      return ok(app_.set_rule_active(seg[1], seg[2] == "activate"));
    }
  }
  if (n >= 1 && seg[0] == "profile") {
    if (n == 1) {
      if (m != "GET") wrong_method(request);
      return ok(app_.profile());
    }
    if (n == 2 && seg[1] == "graph") {
      if (m != "GET") wrong_method(request);
      return ok(app_.profile_graph());
    }
  }
  if (n == 1 && seg[0] == "filter-records") {
    if (m != "GET") wrong_method(request);
    store::RecordQuery q;
    q.from_seq = query_number(request, "from_seq").value_or(0);
    q.to_seq = query_number(request, "to_seq");
    q.rule_id = query_param(request, "rule_id");
    q.offset = query_number(request, "offset").value_or(0);
    q.limit = query_number(request, "limit").value_or(100);
    return ok(app_.filter_records(q));
  }
  if (n == 1 && seg[0] == "filter-stats") {
    if (m != "GET") wrong_method(request);
    return ok(app_.filter_stats(query_param(request, "rule_id")));
  }
  if (n >= 1 && seg[0] == "conversations") {
    if (n == 1) {
      if (m != "POST") wrong_method(request);
      return created(app_.open_conversation(parse_body(request)));
    }
    if (n == 2) {
      if (m != "GET") wrong_method(request);
      return ok(app_.get_conversation(seg[1]));
    }
    if (n == 3 && seg[2] == "messages") {
      if (m != "POST") wrong_method(request);
      return ok(app_.post_message(seg[1], parse_body(request)));
    }
    if (n == 3 && seg[2] == "close") {
      if (m != "POST") wrong_method(request);
      return ok(app_.close_conversation(seg[1]));
    }
  }
  if (n == 2 && seg[0] == "actions" && seg[1] == "pending") {
    if (m != "GET") wrong_method(request);
    return ok(app_.pending_actions());
  }
  if (n == 3 && seg[0] == "actions" && seg[2] == "confirm") {
    if (m != "POST") wrong_method(request);
    return ok(app_.confirm_action(seg[1], parse_body(request)));
  }
  throw RouteError(404, "NotFound", "no route for " + m + " " + request.path);
}

}  // namespace feedguard::service
