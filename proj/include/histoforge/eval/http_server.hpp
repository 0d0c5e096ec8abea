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

#ifndef HISTOFORGE_EVAL_HTTP_SERVER_HPP
#define HISTOFORGE_EVAL_HTTP_SERVER_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "histoforge/eval/service.hpp"

namespace histoforge::eval {

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Routes one request against the service. Transport-independent so the
/// route table can be exercised without sockets.
ApiResponse handle_request(EvalService& service, const std::string& method,
                           const std::string& path,
                           const std::map<std::string, std::string>& query,
                           const std::string& body);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

class HttpServer {
 public:
  HttpServer(EvalService& service, ServerOptions options);
  ~HttpServer();

  /// Binds the socket and returns the bound port.
  int bind();
  /// Blocks serving requests until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace histoforge::eval

#endif  // HISTOFORGE_EVAL_HTTP_SERVER_HPP
