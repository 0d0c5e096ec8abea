// Copyright 2026 The HistoForge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "histoforge/eval/http_server.hpp"

#include <httplib.h>

#include <json.hpp>
#include <string_view>
#include <vector>

#include "histoforge/ftensor.hpp"

namespace histoforge::eval {
namespace {

using nlohmann::json;

ApiResponse json_response(int status, std::string body) {
  return ApiResponse{status, "application/json", std::move(body)};
}

ApiResponse error_response(int status, std::string_view reason, const std::string& message) {
  return json_response(status, json{{"error", reason}, {"message", message}}.dump());
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto end = path.find('/', start);
    const auto piece = path.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!piece.empty()) parts.push_back(piece);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return parts;
}

std::optional<std::string> query_value(const std::map<std::string, std::string>& query,
                                       const std::string& key) {
  const auto it = query.find(key);
  if (it == query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

ApiResponse create_session(EvalService& service, const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    return error_response(400, "invalid_request", "body is not valid JSON");
  }
  if (!doc.is_object() || !doc.contains("rater_id") || !doc.at("rater_id").is_string())
    return error_response(400, "invalid_request", "rater_id must be a string");
  if (!doc.contains("seed") || !doc.at("seed").is_number_unsigned())
    return error_response(400, "invalid_request", "seed must be a non-negative integer");
  return json_response(201, service.create_session(doc.at("rater_id").get<std::string>(),
                                                   doc.at("seed").get<std::uint64_t>()));
}

ApiResponse route(EvalService& service, const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& query, const std::string& body) {
  const auto parts = split_path(path);
  const auto n = parts.size();
  if (n == 1 && parts[0] == "sessions" && method == "POST") return create_session(service, body);
  if (n == 3 && parts[0] == "sessions" && parts[2] == "next" && method == "GET")
    return json_response(200, service.next_item(parts[1]));
  if (n == 3 && parts[0] == "sessions" && parts[2] == "ratings" && method == "POST")
    return json_response(200, service.post_rating(parts[1], parse_rating(body)));
  if (n == 3 && parts[0] == "sessions" && parts[2] == "export" && method == "GET") {
    service.snapshot(parts[1]);
    ExportFilter filter;
    filter.session_id = parts[1];
    const auto format = query_value(query, "format").value_or("json");
    if (format == "csv") return ApiResponse{200, "text/csv", service.export_csv(filter)};
    if (format == "json") return json_response(200, service.export_json(filter));
    return error_response(400, "invalid_request", "format must be json or csv");
  }
  if (n == 1 && parts[0] == "aggregate" && method == "GET")
    return json_response(200, service.aggregate_json(query_value(query, "dataset")));
  if (n == 2 && parts[0] == "images" && method == "GET") {
    const auto file = service.image_path(parts[1]);
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_file_bytes(file);
    } catch (const Error&) {
      return error_response(404, "not_found", "image unavailable");
    }
    return ApiResponse{200, "image/png", std::string(bytes.begin(), bytes.end())};
  }
  return error_response(404, "not_found", "no route for " + method + " " + path);
}

}  // namespace

ApiResponse handle_request(EvalService& service, const std::string& method,
                           const std::string& path,
                           const std::map<std::string, std::string>& query,
                           const std::string& body) {
  try {
    return route(service, method, path, query, body);
  } catch (const ServiceError& e) {
    return error_response(e.http_status(), to_string(e.reason()), e.what());
  } catch (const Error& e) {
    const int status = e.code() == Errc::not_found ? 404 : e.code() == Errc::conflict ? 409
                       : e.code() == Errc::io ? 500 : 400;
    return error_response(status, to_string(e.code()), e.what());
  }
}

struct HttpServer::Impl {
  Impl(EvalService& s, ServerOptions o) : service(s), options(std::move(o)) {}
  EvalService& service;
  ServerOptions options;
  httplib::Server server;
};

HttpServer::HttpServer(EvalService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const auto out = handle_request(impl_->service, req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type.c_str());
  };
  auto& srv = impl_->server;
  srv.Post("/sessions", handler);
  srv.Get(R"(/sessions/[^/]+/(next|export))", handler);
  srv.Post(R"(/sessions/[^/]+/ratings)", handler);
  srv.Get("/aggregate", handler);
  srv.Get(R"(/images/[^/]+)", handler);
  if (impl_->options.static_dir) {
    require(srv.set_mount_point("/", impl_->options.static_dir->string()), Errc::not_found,
            "static directory " + impl_->options.static_dir->string() + " not found");
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& srv = impl_->server;
  const int port = impl_->options.port == 0
                       ? srv.bind_to_any_port(impl_->options.host)
                       : (srv.bind_to_port(impl_->options.host, impl_->options.port)
                              ? impl_->options.port
                              : -1);
  require(port > 0, Errc::io,
          "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace histoforge::eval
