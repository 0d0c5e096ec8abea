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

#ifndef HISTOFORGE_EVAL_SESSION_STORE_HPP
#define HISTOFORGE_EVAL_SESSION_STORE_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace histoforge::eval {

/// Append-only JSON-lines logs, one file per session (`<session_id>.jsonl`).
/// append() returns only after the line is flushed and fsync'ed.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return directory_; }

  void append(const std::string& session_id, const std::string& json_line) const;

  /// Every complete line of every log, keyed by session id. A torn final line
  /// (no trailing newline) was never acknowledged; it is truncated away so
  /// later appends start on a clean line.
  std::map<std::string, std::vector<std::string>> recover() const;

  std::filesystem::path log_path(const std::string& session_id) const;

 private:
  std::filesystem::path directory_;
};

}  // namespace histoforge::eval

#endif  // HISTOFORGE_EVAL_SESSION_STORE_HPP
