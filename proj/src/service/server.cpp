#include "feedguard/service/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace feedguard::service {

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Router& router) : impl_(std::make_unique<Impl>()) {
  auto handler = [&router](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request;
    request.method = req.method;
    request.path = req.path;
    request.body = req.body;
    for (const auto& [k, v] : req.params) request.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) request.headers.emplace(k, v);
    auto response = router.handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  };
  const std::string any = ".*";
  impl_->server.Get(any, handler);
  impl_->server.Post(any, handler);
  impl_->server.Put(any, handler);
  impl_->server.Patch(any, handler);
  impl_->server.Delete(any, handler);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::InvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

void serve_http(Router& router, const std::string& host, int port) {
  HttpServer server(router);
  const int bound = server.bind(host, port);
  spdlog::info("listening on http://{}:{}", host, bound);
  server.run();
}

}  // namespace feedguard::service
