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

#ifndef HISTOFORGE_GRID_HPP
#define HISTOFORGE_GRID_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "histoforge/ftensor.hpp"
#include "histoforge/image.hpp"

namespace histoforge {

/// Dense label grid. Labels are class ids in [0, num_classes); the one-hot
/// form is materialized on demand by one_hot().
class SemanticMap {
 public:
  SemanticMap(int height, int width, int num_classes, std::vector<std::int32_t> labels,
              std::optional<std::int32_t> background_label = std::nullopt);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_classes() const { return num_classes_; }
  std::optional<std::int32_t> background_label() const { return background_; }
  std::span<const std::int32_t> labels() const { return labels_; }

  std::int32_t at(int row, int col) const {
    return labels_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::size_t size() const { return labels_.size(); }

  SemanticMap with_background(std::optional<std::int32_t> background) const;

  /// Pixel count per class id.
  std::vector<std::uint64_t> histogram() const;

  /// Class ids with at least one pixel, ascending.
  std::vector<std::int32_t> present_classes() const;

  bool operator==(const SemanticMap&) const = default;

 private:
  int height_;
  int width_;
  int num_classes_;
  std::vector<std::int32_t> labels_;
  std::optional<std::int32_t> background_;
};

/// Square window inside a map.
struct RegionSpec {
  int row = 0;
  int col = 0;
  int size = 0;
};

struct EntropyMap {
  int region_size = 0;
  int stride = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // nats, row-major [rows, cols]

  double mean() const;
  Tensor<float> to_tensor() const;
};

/// K binary planes, shape [K, H, W].
using MaskStack = Tensor<std::uint8_t>;

MaskStack one_hot(const SemanticMap& map);

/// Non-background fraction. Requires a background label.
double tissue_ratio(const SemanticMap& map);
double background_ratio(const SemanticMap& map);

/// Shannon entropy (natural log) of a count histogram; zero bins contribute 0.
double histogram_entropy(std::span<const std::uint64_t> counts);

double region_entropy(const SemanticMap& map, const RegionSpec& region);

/// Sliding-window entropy; grid dims are floor((H - size) / stride) + 1 per axis.
EntropyMap entropy_map(const SemanticMap& map, int region_size, int stride);

/// Default heterogeneity window.
inline constexpr int kDefaultRegionSize = 64;
inline constexpr int kDefaultRegionStride = 32;

/// Tissue present iff the fraction of pixels darker than
/// luminance_cutoff * 255 (Rec.601 luma) exceeds tissue_fraction.
bool is_tissue(const RgbImage& patch, double tissue_fraction = 0.10, double luminance_cutoff = 0.9);

/// Loads a label map from an i32 FTensor [H, W] or an indexed PNG. When
/// num_classes is not given it is max(label) + 1.
SemanticMap load_semantic_map(const std::filesystem::path& path,
                              std::optional<int> num_classes = std::nullopt,
                              std::optional<std::int32_t> background_label = std::nullopt);
void save_semantic_map(const std::filesystem::path& path, const SemanticMap& map);

}  // namespace histoforge

#endif  // HISTOFORGE_GRID_HPP
