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

#ifndef HISTOFORGE_PARALLEL_HPP
#define HISTOFORGE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace histoforge {

/// Worker count: HISTOFORGE_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t thread_count();

/// Runs body(begin, end) over disjoint contiguous ranges covering [0, n).
/// Bodies must only write to per-index outputs so results are independent of
/// the split.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_grain = 256);

}  // namespace histoforge

#endif  // HISTOFORGE_PARALLEL_HPP
