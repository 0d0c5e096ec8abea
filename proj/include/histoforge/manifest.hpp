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

#ifndef HISTOFORGE_MANIFEST_HPP
#define HISTOFORGE_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "histoforge/sampling.hpp"

namespace histoforge {

/// One row of a patch manifest. Paths are resolved against the manifest's
/// directory when relative.
struct ManifestEntry {
  std::string patch_id;
  std::filesystem::path image_path;
  std::filesystem::path map_path;
  std::optional<std::string> wsi_id;
  std::optional<std::string> dataset;
};

/// Accepts a JSON array of entries, or an object with a "patches" array.
std::vector<ManifestEntry> parse_manifest(const std::string& json,
                                          const std::filesystem::path& base_dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Loads every map. All maps share one class count: num_classes when given,
/// otherwise the largest label seen plus one.
PatchDataset load_patch_dataset(const std::filesystem::path& manifest_path,
                                std::optional<int> num_classes = std::nullopt,
                                std::optional<std::int32_t> background_label = 0);

}  // namespace histoforge

#endif  // HISTOFORGE_MANIFEST_HPP
