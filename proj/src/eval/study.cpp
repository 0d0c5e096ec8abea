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

#include "histoforge/eval/study.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <numeric>

#include "histoforge/error.hpp"
#include "histoforge/ftensor.hpp"
#include "histoforge/rng.hpp"

namespace histoforge::eval {
namespace {

bool valid_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

}  // namespace

StudyManifest::StudyManifest(std::vector<StudyItem> items, bool require_balanced)
    : items_(std::move(items)) {
  require(!items_.empty(), Errc::invalid_argument, "study manifest has no items");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    require(valid_id(it.item_id), Errc::invalid_argument,
            "item_id must match [A-Za-z0-9._-]+: " + it.item_id);
    require(std::find(kStudyDatasets.begin(), kStudyDatasets.end(), it.dataset) !=
                kStudyDatasets.end(),
            Errc::invalid_argument, "unknown dataset " + it.dataset);
    require(index_.emplace(it.item_id, i).second, Errc::invalid_argument,
            "duplicate item_id " + it.item_id);
  }
  if (require_balanced) {
    const auto c = counts();
    for (const auto& ds : kStudyDatasets) {
      const auto real = c.contains({ds, Origin::real}) ? c.at({ds, Origin::real}) : 0;
      const auto synth = c.contains({ds, Origin::synthetic}) ? c.at({ds, Origin::synthetic}) : 0;
      require(real == synth, Errc::invalid_argument,
              "dataset " + ds + " is unbalanced (" + std::to_string(real) + " vs " +
                  std::to_string(synth) + ")");
    }
  }
}

StudyManifest StudyManifest::parse(const std::string& json, const std::filesystem::path& base_dir,
                                   bool require_balanced) {
  std::vector<StudyItem> items;
  try {
    const auto doc = nlohmann::json::parse(json);
    const auto& rows = doc.is_object() ? doc.at("items") : doc;
    require(rows.is_array(), Errc::invalid_argument, "study manifest must list items");
    for (const auto& row : rows) {
      std::filesystem::path image(row.at("image_path").get<std::string>());
      if (image.is_relative()) image = base_dir / image;
      items.push_back(StudyItem{row.at("item_id").get<std::string>(),
                                row.at("dataset").get<std::string>(), image,
                                origin_from_string(row.at("origin").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed study manifest: ") + e.what());
  }
  return StudyManifest(std::move(items), require_balanced);
}

StudyManifest StudyManifest::load(const std::filesystem::path& path, bool require_balanced) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string(bytes.begin(), bytes.end()), path.parent_path(), require_balanced);
}

std::optional<std::size_t> StudyManifest::find(const std::string& item_id) const {
  const auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::map<std::pair<std::string, Origin>, std::size_t> StudyManifest::counts() const {
  std::map<std::pair<std::string, Origin>, std::size_t> out;
  for (const auto& it : items_) ++out[{it.dataset, it.origin}];
  return out;
}

std::vector<std::size_t> presentation_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace histoforge::eval
