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

#include "histoforge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "histoforge/error.hpp"
#include "histoforge/parallel.hpp"

namespace histoforge {

SemanticMap::SemanticMap(int height, int width, int num_classes, std::vector<std::int32_t> labels,
                         std::optional<std::int32_t> background_label)
    : height_(height),
      width_(width),
      num_classes_(num_classes),
      labels_(std::move(labels)),
      background_(background_label) {
  require(height > 0 && width > 0, Errc::invalid_argument, "semantic map must be non-empty");
  require(num_classes > 0, Errc::invalid_argument, "semantic map needs at least one class");
  require(labels_.size() == static_cast<std::size_t>(height) * width, Errc::dimension_mismatch,
          "label count does not match map dims");
  for (auto v : labels_)
    require(v >= 0 && v < num_classes, Errc::out_of_range,
            "label " + std::to_string(v) + " outside [0, " + std::to_string(num_classes) + ")");
  if (background_)
    require(*background_ >= 0 && *background_ < num_classes, Errc::out_of_range,
            "background label outside class range");
}

SemanticMap SemanticMap::with_background(std::optional<std::int32_t> background) const {
  return SemanticMap(height_, width_, num_classes_, labels_, background);
}

std::vector<std::uint64_t> SemanticMap::histogram() const {
  std::vector<std::uint64_t> counts(num_classes_, 0);
  for (auto v : labels_) ++counts[v];
  return counts;
}

std::vector<std::int32_t> SemanticMap::present_classes() const {
  const auto counts = histogram();
  std::vector<std::int32_t> present;
  for (int k = 0; k < num_classes_; ++k)
    if (counts[k] > 0) present.push_back(k);
  return present;
}

double EntropyMap::mean() const {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

Tensor<float> EntropyMap::to_tensor() const {
  Tensor<float> t({static_cast<std::uint64_t>(rows), static_cast<std::uint64_t>(cols)});
  std::transform(values.begin(), values.end(), t.data.begin(),
                 [](double v) { return static_cast<float>(v); });
  return t;
}

MaskStack one_hot(const SemanticMap& map) {
  const auto plane = static_cast<std::uint64_t>(map.size());
  MaskStack stack({static_cast<std::uint64_t>(map.num_classes()),
                   static_cast<std::uint64_t>(map.height()),
                   static_cast<std::uint64_t>(map.width())});
  const auto labels = map.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) stack.data[labels[i] * plane + i] = 1;
  return stack;
}

double tissue_ratio(const SemanticMap& map) {
  const auto bg = map.background_label();
  require(bg.has_value(), Errc::invalid_argument, "tissue_ratio requires a background label");
  const auto labels = map.labels();
  const auto tissue = std::count_if(labels.begin(), labels.end(), [&](auto v) { return v != *bg; });
  return static_cast<double>(tissue) / static_cast<double>(labels.size());
}

double background_ratio(const SemanticMap& map) {
  const auto bg = map.background_label();
  require(bg.has_value(), Errc::invalid_argument, "background_ratio requires a background label");
  const auto labels = map.labels();
  const auto background = std::count(labels.begin(), labels.end(), *bg);
  return static_cast<double>(background) / static_cast<double>(labels.size());
}

double histogram_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::max(0.0, h);
}

double region_entropy(const SemanticMap& map, const RegionSpec& region) {
  require(region.size > 0, Errc::invalid_argument, "degenerate region (size 0)");
  require(region.row >= 0 && region.col >= 0 && region.row + region.size <= map.height() &&
              region.col + region.size <= map.width(),
          Errc::out_of_range, "region lies outside the map");
  std::vector<std::uint64_t> counts(map.num_classes(), 0);
  for (int r = region.row; r < region.row + region.size; ++r)
    for (int c = region.col; c < region.col + region.size; ++c) ++counts[map.at(r, c)];
  return histogram_entropy(counts);
}

EntropyMap entropy_map(const SemanticMap& map, int region_size, int stride) {
  require(region_size > 0, Errc::invalid_argument, "region_size must be positive");
  require(stride >= 1, Errc::invalid_argument, "stride must be >= 1");
  require(region_size <= std::min(map.height(), map.width()), Errc::out_of_range,
          "region_size larger than map");
  EntropyMap out;
  out.region_size = region_size;
  out.stride = stride;
  out.rows = (map.height() - region_size) / stride + 1;
  out.cols = (map.width() - region_size) / stride + 1;
  out.values.assign(static_cast<std::size_t>(out.rows) * out.cols, 0.0);
  parallel_for(
      out.values.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const int r = static_cast<int>(i) / out.cols;
          const int c = static_cast<int>(i) % out.cols;
          out.values[i] = region_entropy(map, {r * stride, c * stride, region_size});
        }
      },
      16);
  return out;
}

bool is_tissue(const RgbImage& patch, double tissue_fraction, double luminance_cutoff) {
  require(!patch.empty(), Errc::invalid_argument, "is_tissue: empty image");
  const double cutoff = luminance_cutoff * 255.0;
  std::size_t dark = 0;
  const std::size_t n = static_cast<std::size_t>(patch.height) * patch.width;
  for (std::size_t i = 0; i < n; ++i) {
    const double luma = 0.299 * patch.pixels[3 * i] + 0.587 * patch.pixels[3 * i + 1] +
                        0.114 * patch.pixels[3 * i + 2];
    if (luma < cutoff) ++dark;
  }
  return static_cast<double>(dark) / static_cast<double>(n) > tissue_fraction;
}

SemanticMap load_semantic_map(const std::filesystem::path& path, std::optional<int> num_classes,
                              std::optional<std::int32_t> background_label) {
  int h = 0;
  int w = 0;
  std::vector<std::int32_t> labels;
  if (path.extension() == ".png") {
    const auto img = read_png_indexed(path);
    h = img.height;
    w = img.width;
    labels.assign(img.indices.begin(), img.indices.end());
  } else {
    auto t = read_ftensor_as<std::int32_t>(path);
    require(t.ndim() == 2, Errc::dimension_mismatch, "label map FTensor must be [H, W]");
    h = static_cast<int>(t.dim(0));
    w = static_cast<int>(t.dim(1));
    labels = std::move(t.data);
  }
  int k = num_classes.value_or(0);
  if (!num_classes) {
    for (auto v : labels) k = std::max(k, v + 1);
    if (background_label) k = std::max(k, *background_label + 1);
  }
  return SemanticMap(h, w, std::max(k, 1), std::move(labels), background_label);
}

void save_semantic_map(const std::filesystem::path& path, const SemanticMap& map) {
  if (path.extension() == ".png") {
    require(map.num_classes() <= 256, Errc::out_of_range, "indexed PNG holds at most 256 classes");
    IndexedImage img{map.height(), map.width(), {}};
    img.indices.assign(map.labels().begin(), map.labels().end());
    write_png_indexed(path, img);
    return;
  }
  write_ftensor(path, Tensor<std::int32_t>({static_cast<std::uint64_t>(map.height()),
                                            static_cast<std::uint64_t>(map.width())},
                                           {map.labels().begin(), map.labels().end()}));
}

}  // namespace histoforge
