#pragma once

#include <memory>
#include <string>

#include "feedguard/service/router.hpp"

namespace feedguard::service {

/// HTTP front end for a Router.
class HttpServer {
 public:
  explicit HttpServer(Router& router);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the address; port 0 picks a free port. Returns the bound port.
  /// Throws Error(InvalidArgument) if the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves requests until stop(). Blocks.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// bind() + run().
void serve_http(Router& router, const std::string& host, int port);

}  // namespace feedguard::service
