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

#ifndef HISTOFORGE_ERROR_HPP
#define HISTOFORGE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace histoforge {

/// Broad failure categories. The CLI maps every category to exit code 1 and
/// the HTTP layer maps them to status codes.
enum class Errc {
  invalid_argument,
  out_of_range,
  dimension_mismatch,
  not_found,
  conflict,
  io,
  numerical,
  exhausted,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace histoforge

#endif  // HISTOFORGE_ERROR_HPP
