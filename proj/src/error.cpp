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

#include "histoforge/error.hpp"

namespace histoforge {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::out_of_range: return "out_of_range";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::not_found: return "not_found";
    case Errc::conflict: return "conflict";
    case Errc::io: return "io";
    case Errc::numerical: return "numerical";
    case Errc::exhausted: return "exhausted";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace histoforge
