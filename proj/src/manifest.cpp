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

#include "histoforge/manifest.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>

#include "histoforge/error.hpp"
#include "histoforge/ftensor.hpp"

namespace histoforge {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::optional<std::string> optional_string(const nlohmann::json& row, const char* key) {
  if (!row.contains(key) || row.at(key).is_null()) return std::nullopt;
  return row.at(key).get<std::string>();
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(const std::string& json,
                                          const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("manifest is not valid JSON: ") + e.what());
  }
  const nlohmann::json& rows = doc.is_object() ? doc.at("patches") : doc;
  require(rows.is_array(), Errc::invalid_argument, "manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  for (const auto& row : rows) {
    try {
      ManifestEntry e;
      e.patch_id = row.at("patch_id").get<std::string>();
      e.image_path = resolve(base_dir, row.at("image_path").get<std::string>());
      e.map_path = resolve(base_dir, row.at("map_path").get<std::string>());
      e.wsi_id = optional_string(row, "wsi_id");
      e.dataset = optional_string(row, "dataset");
      require(seen.insert(e.patch_id).second, Errc::invalid_argument,
              "duplicate patch_id " + e.patch_id);
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(Errc::invalid_argument, std::string("malformed manifest row: ") + ex.what());
    }
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

PatchDataset load_patch_dataset(const std::filesystem::path& manifest_path,
                                std::optional<int> num_classes,
                                std::optional<std::int32_t> background_label) {
  const auto entries = read_manifest(manifest_path);
  std::vector<SemanticMap> maps;
  maps.reserve(entries.size());
  int k = num_classes.value_or(0);
  for (const auto& e : entries) {
    maps.push_back(load_semantic_map(e.map_path, num_classes, std::nullopt));
    if (!num_classes) k = std::max(k, maps.back().num_classes());
  }
  if (background_label) k = std::max(k, *background_label + 1);
  PatchDataset ds;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& m = maps[i];
    ds.patches.push_back(PatchRecord{
        entries[i].patch_id, entries[i].image_path, entries[i].map_path,
        SemanticMap(m.height(), m.width(), k, {m.labels().begin(), m.labels().end()},
                    background_label),
        entries[i].wsi_id, entries[i].dataset});
  }
  return ds;
}

}  // namespace histoforge
