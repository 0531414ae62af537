// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/http_server.hpp"

#include <httplib.h>

namespace alearn {

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void reply_error(httplib::Response& res, int status, std::string_view code,
                 const std::string& message) {
  reply(res, status, {{"code", code}, {"message", message}});
}

// Maps library exceptions onto the documented status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const PoolExhaustedError& e) {
    reply_error(res, 410, "complete", e.what());
  } catch (const ConflictError& e) {
    reply_error(res, 409, "conflict", e.what());
  } catch (const NotFoundError& e) {
    reply_error(res, 404, "not_found", e.what());
  } catch (const ConfigError& e) {
    reply_error(res, 400, "validation", e.what());
  } catch (const nlohmann::json::exception& e) {
    reply_error(res, 400, "validation", e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, "internal", e.what());
  }
}

LabelSubmission parse_submission(const std::string& body) {
  const auto doc = nlohmann::json::parse(body);
  if (!doc.is_object()) throw ConfigError("body must be a JSON object");
  if (!doc.contains("query_id") || !doc["query_id"].is_string()) {
    throw ConfigError("missing string field 'query_id'");
  }
  LabelSubmission s;
  s.query_id = doc["query_id"].get<std::string>();
  const bool reject = doc.value("reject", false);
  const bool has_label = doc.contains("label") && !doc["label"].is_null();
  if (reject == has_label) throw ConfigError("give exactly one of 'label' or 'reject': true");
  if (has_label) {
    if (!doc["label"].is_number_integer()) throw ConfigError("'label' must be an integer");
    s.label = doc["label"].get<int>();
  }
  if (doc.contains("annotator_id") && doc["annotator_id"].is_string()) {
    s.annotator_id = doc["annotator_id"].get<std::string>();
  }
  return s;
}

}  // namespace

HttpServer::HttpServer(AnnotationService& service, std::optional<std::filesystem::path> static_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  // httplib defaults to SO_REUSEPORT, which lets a second server share a port
  // that is already in use. Only allow rebinding sockets left in TIME_WAIT.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  srv.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, service_.status()); });
  });
  srv.Get("/api/next", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, to_json(service_.next_query())); });
  });
  srv.Post("/api/label", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, service_.submit(parse_submission(req.body))); });
  });
  srv.Get("/api/curve", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, service_.curve()); });
  });
  srv.Get("/api/classes", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, service_.classes()); });
  });
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      reply_error(res, 404, "not_found", "no route for " + req.method + " " + req.path);
    }
  });
  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      throw IoError("static directory '" + static_dir->string() + "' does not exist");
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace alearn
