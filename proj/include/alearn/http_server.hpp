// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "alearn/annotation_service.hpp"

namespace httplib {
class Server;
}

namespace alearn {

/// JSON-over-HTTP front end of an AnnotationService.
///
///   GET  /api/status   GET /api/next   POST /api/label
///   GET  /api/curve    GET /api/classes
///
/// Errors are `{"code": ..., "message": ...}` with status 400 (validation),
/// 404 (unknown id), 409 (conflict) or 410 (pool exhausted).
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service,
                      std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port. Throws IoError when the address cannot be bound.
  int bind(const std::string& host, int port);

  /// Serves requests until stop(). Requires a successful bind().
  void run();
  void stop();
  bool running() const;

 private:
  AnnotationService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace alearn
