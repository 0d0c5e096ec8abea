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

#ifndef HISTOFORGE_CONDITIONING_HPP
#define HISTOFORGE_CONDITIONING_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "histoforge/ftensor.hpp"
#include "histoforge/grid.hpp"
#include "histoforge/image.hpp"
#include "histoforge/sampling.hpp"

namespace histoforge {

enum class CropTransform : std::uint8_t { identity, rot90, rot180, rot270, flip_h, flip_v };

std::string_view to_string(CropTransform t);
CropTransform crop_transform_from_string(std::string_view name);

struct CropRecord {
  int row = 0;
  int col = 0;
  int size = 0;
  std::string source_patch_id;
  CropTransform transform = CropTransform::identity;
  double brightness = 1.0;
};

/// Dual conditioning tensor: K one-hot semantic planes followed by K RGB crop
/// planes (3 channels each), channel-first [4K, H, W], values in [0, 1].
struct ConditioningTensor {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  Tensor<float> planes;
  std::vector<std::optional<CropRecord>> crop_records;  // one slot per class

  int channels() const { return 4 * num_classes; }
  std::span<const float> channel(int c) const {
    const auto plane = static_cast<std::size_t>(height) * width;
    return {planes.data.data() + plane * c, plane};
  }
  /// First channel of class k's RGB crop plane.
  int crop_channel(int k) const { return num_classes + 3 * k; }
};

struct ExtractedCrop {
  RgbImage crop;
  int row = 0;
  int col = 0;
};

/// Square d x d crop whose center pixel is drawn uniformly from the mask's
/// positive pixels; the square is then clamped into the image.
ExtractedCrop extract_crop(const RgbImage& patch, std::span<const std::uint8_t> mask, int size,
                           std::uint64_t seed);

struct AugmentedCrop {
  RgbImage image;
  CropTransform transform = CropTransform::identity;
  double brightness = 1.0;
};

/// One of the six dihedral transforms chosen per seed, then an optional
/// channel-uniform brightness factor in [1 - jitter, 1 + jitter].
AugmentedCrop augment_crop(const RgbImage& crop, std::uint64_t seed, double brightness_jitter = 0.0);

RgbImage apply_transform(const RgbImage& square, CropTransform t);
CropTransform inverse(CropTransform t);

/// Zero H x W RGB plane with `crop` pasted at (row, col).
RgbImage place_crop(int height, int width, const RgbImage& crop, int row, int col);

/// Training-mode conditioning: crops come from the patch's own class regions.
ConditioningTensor build_condition(const RgbImage& patch, const SemanticMap& map,
                                   const SamplerConfig& cfg, std::uint64_t seed,
                                   const std::string& source_patch_id = {});

/// A crop supplied from an external bank for one class.
struct BankCrop {
  RgbImage crop;
  std::string source_patch_id;
};

/// Inference-mode conditioning: per-class crops are taken from a bank and
/// placed centered on a random pixel of the class region.
ConditioningTensor build_condition_from_bank(const SemanticMap& map,
                                             std::span<const std::optional<BankCrop>> bank,
                                             std::uint64_t seed);

/// Semantic planes only; crop planes left zero.
ConditioningTensor semantic_only_condition(const SemanticMap& map);

/// Re-checks the layout invariants from the tensor alone. Returns an empty
/// list when the tensor is well formed.
std::vector<std::string> check_condition_layout(const ConditioningTensor& cond);

/// Wraps a [4K, H, W] tensor read from disk (crop records unknown).
ConditioningTensor condition_from_tensor(Tensor<float> planes);

std::string crop_records_json(const ConditioningTensor& cond);
void attach_crop_records_json(ConditioningTensor& cond, const std::string& json);

struct LatentCondition {
  int height = 0;
  int width = 0;
  int channels = 0;
  int factor = 1;
  Tensor<float> data;  // [channels, height, width]
};

/// Mean pooling over factor x factor blocks; stands in for the image encoder.
LatentCondition downsample_condition(const ConditioningTensor& cond, int factor = 4);

/// Channel concatenation [z_t ; cond] along the first axis.
Tensor<float> concat_latent(const Tensor<float>& z_t, const LatentCondition& cond);

}  // namespace histoforge

#endif  // HISTOFORGE_CONDITIONING_HPP
