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

#ifndef HISTOFORGE_EVAL_STUDY_HPP
#define HISTOFORGE_EVAL_STUDY_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "histoforge/metrics.hpp"

namespace histoforge::eval {

inline const std::vector<std::string> kStudyDatasets = {"camelyon16", "panda", "tcga"};

struct StudyItem {
  std::string item_id;
  std::string dataset;
  std::filesystem::path image_path;
  Origin origin = Origin::real;
};

/// Items of a blinded rating study. Item ids are restricted to
/// [A-Za-z0-9._-] so they can appear in URLs unescaped.
class StudyManifest {
 public:
  StudyManifest() = default;
  explicit StudyManifest(std::vector<StudyItem> items, bool require_balanced = false);

  static StudyManifest parse(const std::string& json, const std::filesystem::path& base_dir,
                             bool require_balanced = false);
  static StudyManifest load(const std::filesystem::path& path, bool require_balanced = false);

  const std::vector<StudyItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::optional<std::size_t> find(const std::string& item_id) const;

  /// Item count per (dataset, origin).
  std::map<std::pair<std::string, Origin>, std::size_t> counts() const;

 private:
  std::vector<StudyItem> items_;
  std::map<std::string, std::size_t> index_;
};

/// Seeded Fisher-Yates permutation of [0, n); stable across platforms so a
/// session's order can be recomputed from its stored seed.
std::vector<std::size_t> presentation_order(std::size_t n, std::uint64_t seed);

}  // namespace histoforge::eval

#endif  // HISTOFORGE_EVAL_STUDY_HPP
