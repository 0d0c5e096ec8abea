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

#include "histoforge/eval/session_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "histoforge/error.hpp"

namespace histoforge::eval {

SessionStore::SessionStore(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  require(!ec && std::filesystem::is_directory(directory_), Errc::io,
          "cannot create session store " + directory_.string());
}

std::filesystem::path SessionStore::log_path(const std::string& session_id) const {
  return directory_ / (session_id + ".jsonl");
}

void SessionStore::append(const std::string& session_id, const std::string& json_line) const {
  const auto path = log_path(session_id);
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  require(fd >= 0, Errc::io, "cannot open " + path.string() + ": " + std::strerror(errno));
  std::string line = json_line;
  line.push_back('\n');
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ::close(fd);
      fail(Errc::io, "write to " + path.string() + " failed");
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  require(synced, Errc::io, "fsync of " + path.string() + " failed");
}

std::map<std::string, std::vector<std::string>> SessionStore::recover() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    auto& lines = out[entry.path().stem().string()];
    std::size_t start = 0;
    while (start < text.size()) {
      const auto end = text.find('\n', start);
      if (end == std::string::npos) break;
      if (end > start) lines.push_back(text.substr(start, end - start));
      start = end + 1;
    }
    if (start < text.size()) {
      in.close();
      std::filesystem::resize_file(entry.path(), start);
    }
  }
  return out;
}

}  // namespace histoforge::eval
