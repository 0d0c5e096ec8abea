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

#include "histoforge/conditioning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>

#include "histoforge/error.hpp"
#include "histoforge/rng.hpp"

namespace histoforge {
namespace {

constexpr std::array<CropTransform, 6> kTransforms = {
    CropTransform::identity, CropTransform::rot90,  CropTransform::rot180,
    CropTransform::rot270,   CropTransform::flip_h, CropTransform::flip_v};

constexpr float kInv255 = 1.0f / 255.0f;

// Uniform pick of a center among positive mask pixels, square clamped into
// [0, H - size] x [0, W - size].
std::pair<int, int> pick_origin(int height, int width, std::span<const std::uint8_t> mask,
                                int size, Rng& rng) {
  std::uint64_t positives = 0;
  for (auto m : mask) positives += m != 0;
  require(positives > 0, Errc::invalid_argument, "crop mask is empty");
  auto target = rng.uniform_index(positives);
  std::size_t center = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    if (target-- == 0) {
      center = i;
      break;
    }
  }
  const int r = static_cast<int>(center / width);
  const int c = static_cast<int>(center % width);
  const int row = std::clamp(r - size / 2, 0, height - size);
  const int col = std::clamp(c - size / 2, 0, width - size);
  return {row, col};
}

void write_crop_plane(ConditioningTensor& cond, int k, const RgbImage& plane) {
  const auto hw = static_cast<std::size_t>(cond.height) * cond.width;
  for (int ch = 0; ch < 3; ++ch) {
    float* out = cond.planes.data.data() + hw * (cond.crop_channel(k) + ch);
    for (std::size_t i = 0; i < hw; ++i) out[i] = plane.pixels[3 * i + ch] * kInv255;
  }
}

ConditioningTensor empty_condition(const SemanticMap& map) {
  ConditioningTensor cond;
  cond.height = map.height();
  cond.width = map.width();
  cond.num_classes = map.num_classes();
  cond.planes = Tensor<float>({static_cast<std::uint64_t>(cond.channels()),
                               static_cast<std::uint64_t>(cond.height),
                               static_cast<std::uint64_t>(cond.width)});
  cond.crop_records.resize(cond.num_classes);
  const auto masks = one_hot(map);
  for (std::size_t i = 0; i < masks.data.size(); ++i) cond.planes.data[i] = masks.data[i];
  return cond;
}

std::span<const std::uint8_t> class_mask(const MaskStack& masks, int k) {
  const auto plane = static_cast<std::size_t>(masks.dim(1) * masks.dim(2));
  return {masks.data.data() + plane * k, plane};
}

}  // namespace

std::string_view to_string(CropTransform t) {
  switch (t) {
    case CropTransform::identity: return "identity";
    case CropTransform::rot90: return "rot90";
    case CropTransform::rot180: return "rot180";
    case CropTransform::rot270: return "rot270";
    case CropTransform::flip_h: return "flip_h";
    case CropTransform::flip_v: return "flip_v";
  }
  return "identity";
}

CropTransform crop_transform_from_string(std::string_view name) {
  for (auto t : kTransforms)
    if (to_string(t) == name) return t;
  fail(Errc::invalid_argument, "unknown crop transform " + std::string(name));
}

ExtractedCrop extract_crop(const RgbImage& patch, std::span<const std::uint8_t> mask, int size,
                           std::uint64_t seed) {
  require(mask.size() == static_cast<std::size_t>(patch.height) * patch.width,
          Errc::dimension_mismatch, "mask does not match patch dims");
  require(size >= 1, Errc::invalid_argument, "crop size must be positive");
  require(size <= std::min(patch.height, patch.width), Errc::out_of_range,
          "crop size " + std::to_string(size) + " exceeds patch dims");
  Rng rng(seed);
  const auto [row, col] = pick_origin(patch.height, patch.width, mask, size, rng);
  ExtractedCrop out{RgbImage(size, size), row, col};
  for (int r = 0; r < size; ++r)
    std::copy_n(patch.pixels.begin() + (static_cast<std::ptrdiff_t>(row + r) * patch.width + col) * 3,
                size * 3, out.crop.pixels.begin() + static_cast<std::ptrdiff_t>(r) * size * 3);
  return out;
}

RgbImage apply_transform(const RgbImage& in, CropTransform t) {
  require(in.height == in.width, Errc::invalid_argument, "crop transforms need a square crop");
  const int n = in.height;
  RgbImage out(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int sr = r;
      int sc = c;
      switch (t) {
        case CropTransform::identity: break;
        case CropTransform::rot90: sr = c; sc = n - 1 - r; break;
        case CropTransform::rot180: sr = n - 1 - r; sc = n - 1 - c; break;
        case CropTransform::rot270: sr = n - 1 - c; sc = r; break;
        case CropTransform::flip_h: sc = n - 1 - c; break;
        case CropTransform::flip_v: sr = n - 1 - r; break;
      }
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = in.at(sr, sc, ch);
    }
  }
  return out;
}

CropTransform inverse(CropTransform t) {
  switch (t) {
    case CropTransform::rot90: return CropTransform::rot270;
    case CropTransform::rot270: return CropTransform::rot90;
    default: return t;
  }
}

AugmentedCrop augment_crop(const RgbImage& crop, std::uint64_t seed, double brightness_jitter) {
  Rng rng(seed);
  AugmentedCrop out;
  out.transform = kTransforms[rng.uniform_index(kTransforms.size())];
  out.image = apply_transform(crop, out.transform);
  if (brightness_jitter > 0.0) {
    out.brightness = 1.0 + brightness_jitter * (2.0 * rng.uniform01() - 1.0);
    for (auto& v : out.image.pixels)
      v = static_cast<std::uint8_t>(std::clamp(std::lround(v * out.brightness), 0L, 255L));
  }
  return out;
}

RgbImage place_crop(int height, int width, const RgbImage& crop, int row, int col) {
  require(crop.height == crop.width, Errc::invalid_argument, "crop must be square");
  require(row >= 0 && col >= 0 && row + crop.height <= height && col + crop.width <= width,
          Errc::out_of_range, "crop origin places the square out of bounds");
  RgbImage plane(height, width);
  for (int r = 0; r < crop.height; ++r)
    std::copy_n(crop.pixels.begin() + static_cast<std::ptrdiff_t>(r) * crop.width * 3,
                crop.width * 3,
                plane.pixels.begin() + (static_cast<std::ptrdiff_t>(row + r) * width + col) * 3);
  return plane;
}

ConditioningTensor build_condition(const RgbImage& patch, const SemanticMap& map,
                                   const SamplerConfig& cfg, std::uint64_t seed,
                                   const std::string& source_patch_id) {
  require(patch.height == map.height() && patch.width == map.width(), Errc::dimension_mismatch,
          "patch and semantic map dims differ");
  require(0 < cfg.d_min && cfg.d_min <= cfg.d_max, Errc::invalid_argument,
          "need 0 < d_min <= d_max");
  ConditioningTensor cond = empty_condition(map);
  const auto masks = one_hot(map);
  const auto counts = map.histogram();
  const int largest = std::min(patch.height, patch.width);
  for (int k = 0; k < map.num_classes(); ++k) {
    if (counts[k] == 0) continue;
    // Per-class stream: results do not depend on the order classes are built.
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    const int hi = std::max(cfg.d_min, std::min(cfg.d_max, largest));
    const int size = static_cast<int>(rng.uniform_int(cfg.d_min, hi));
    const auto crop = extract_crop(patch, class_mask(masks, k), size, rng.next_u64());
    const auto aug = augment_crop(crop.crop, rng.next_u64(), cfg.brightness_jitter);
    write_crop_plane(cond, k, place_crop(cond.height, cond.width, aug.image, crop.row, crop.col));
    cond.crop_records[k] =
        CropRecord{crop.row, crop.col, size, source_patch_id, aug.transform, aug.brightness};
  }
  return cond;
}

ConditioningTensor build_condition_from_bank(const SemanticMap& map,
                                             std::span<const std::optional<BankCrop>> bank,
                                             std::uint64_t seed) {
  require(bank.size() == static_cast<std::size_t>(map.num_classes()), Errc::dimension_mismatch,
          "crop bank needs one slot per class");
  ConditioningTensor cond = empty_condition(map);
  const auto masks = one_hot(map);
  const auto counts = map.histogram();
  for (int k = 0; k < map.num_classes(); ++k) {
    if (counts[k] == 0 || !bank[k]) continue;
    const auto& crop = bank[k]->crop;
    require(crop.height == crop.width, Errc::invalid_argument, "bank crops must be square");
    require(crop.height <= std::min(map.height(), map.width()), Errc::out_of_range,
            "bank crop larger than the map");
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    const auto [row, col] = pick_origin(map.height(), map.width(), class_mask(masks, k), crop.height, rng);
    write_crop_plane(cond, k, place_crop(cond.height, cond.width, crop, row, col));
    cond.crop_records[k] = CropRecord{row, col, crop.height, bank[k]->source_patch_id,
                                      CropTransform::identity, 1.0};
  }
  return cond;
}

ConditioningTensor semantic_only_condition(const SemanticMap& map) { return empty_condition(map); }

std::vector<std::string> check_condition_layout(const ConditioningTensor& cond) {
  std::vector<std::string> issues;
  const int k_count = cond.num_classes;
  const auto hw = static_cast<std::size_t>(cond.height) * cond.width;
  if (cond.planes.shape != std::vector<std::uint64_t>{static_cast<std::uint64_t>(4 * k_count),
                                                      static_cast<std::uint64_t>(cond.height),
                                                      static_cast<std::uint64_t>(cond.width)}) {
    issues.push_back("tensor shape is not [4K, H, W]");
    return issues;
  }
  for (std::size_t i = 0; i < hw; ++i) {
    float sum = 0.0f;
    for (int k = 0; k < k_count; ++k) {
      const float v = cond.channel(k)[i];
      if (v != 0.0f && v != 1.0f) {
        issues.push_back("semantic plane " + std::to_string(k) + " is not binary");
        return issues;
      }
      sum += v;
    }
    if (sum != 1.0f) {
      issues.push_back("semantic planes are not one-hot at pixel " + std::to_string(i));
      return issues;
    }
  }
  for (int k = 0; k < k_count; ++k) {
    const CropRecord* rec = k < static_cast<int>(cond.crop_records.size()) && cond.crop_records[k]
                                ? &*cond.crop_records[k]
                                : nullptr;
    if (rec && (rec->row < 0 || rec->col < 0 || rec->row + rec->size > cond.height ||
                rec->col + rec->size > cond.width)) {
      issues.push_back("crop record for class " + std::to_string(k) + " leaves the image");
      continue;
    }
    for (int ch = 0; ch < 3; ++ch) {
      const auto plane = cond.channel(cond.crop_channel(k) + ch);
      for (std::size_t i = 0; i < hw; ++i) {
        if (plane[i] == 0.0f) continue;
        const int r = static_cast<int>(i / cond.width);
        const int c = static_cast<int>(i % cond.width);
        const bool inside = rec && r >= rec->row && r < rec->row + rec->size && c >= rec->col &&
                            c < rec->col + rec->size;
        if (!inside) {
          issues.push_back("crop plane " + std::to_string(k) + " has support outside its square");
          ch = 3;
          break;
        }
      }
    }
  }
  return issues;
}

ConditioningTensor condition_from_tensor(Tensor<float> planes) {
  require(planes.ndim() == 3 && planes.dim(0) % 4 == 0 && planes.dim(0) > 0,
          Errc::dimension_mismatch, "conditioning tensor must be [4K, H, W]");
  ConditioningTensor cond;
  cond.num_classes = static_cast<int>(planes.dim(0) / 4);
  cond.height = static_cast<int>(planes.dim(1));
  cond.width = static_cast<int>(planes.dim(2));
  cond.planes = std::move(planes);
  cond.crop_records.resize(cond.num_classes);
  return cond;
}

std::string crop_records_json(const ConditioningTensor& cond) {
  nlohmann::json records = nlohmann::json::array();
  for (int k = 0; k < cond.num_classes; ++k) {
    const auto& rec = cond.crop_records[k];
    if (!rec) {
      records.push_back(nullptr);
      continue;
    }
    records.push_back({{"class", k},
                       {"row", rec->row},
                       {"col", rec->col},
                       {"d", rec->size},
                       {"source_patch_id", rec->source_patch_id},
                       {"transform", to_string(rec->transform)},
                       {"brightness", rec->brightness}});
  }
  return nlohmann::json{{"height", cond.height},
                        {"width", cond.width},
                        {"num_classes", cond.num_classes},
                        {"crop_records", records}}
      .dump(2);
}

void attach_crop_records_json(ConditioningTensor& cond, const std::string& json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    const auto& records = doc.at("crop_records");
    require(records.size() == static_cast<std::size_t>(cond.num_classes), Errc::dimension_mismatch,
            "crop record count does not match class count");
    for (int k = 0; k < cond.num_classes; ++k) {
      const auto& r = records[k];
      if (r.is_null()) {
        cond.crop_records[k].reset();
        continue;
      }
      cond.crop_records[k] = CropRecord{r.at("row").get<int>(),
                                        r.at("col").get<int>(),
                                        r.at("d").get<int>(),
                                        r.value("source_patch_id", std::string{}),
                                        crop_transform_from_string(r.value("transform", "identity")),
                                        r.value("brightness", 1.0)};
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed crop records: ") + e.what());
  }
}

LatentCondition downsample_condition(const ConditioningTensor& cond, int factor) {
  require(factor >= 1, Errc::invalid_argument, "downsample factor must be >= 1");
  require(cond.height % factor == 0 && cond.width % factor == 0, Errc::dimension_mismatch,
          "downsample factor must divide H and W");
  LatentCondition out;
  out.height = cond.height / factor;
  out.width = cond.width / factor;
  out.channels = cond.channels();
  out.factor = factor;
  out.data = Tensor<float>({static_cast<std::uint64_t>(out.channels),
                            static_cast<std::uint64_t>(out.height),
                            static_cast<std::uint64_t>(out.width)});
  const double area = static_cast<double>(factor) * factor;
  for (int ch = 0; ch < out.channels; ++ch) {
    const auto in = cond.channel(ch);
    float* dst = out.data.data.data() + static_cast<std::size_t>(ch) * out.height * out.width;
    for (int r = 0; r < out.height; ++r) {
      for (int c = 0; c < out.width; ++c) {
        double acc = 0.0;
        for (int dr = 0; dr < factor; ++dr)
          for (int dc = 0; dc < factor; ++dc)
            acc += in[static_cast<std::size_t>(r * factor + dr) * cond.width + c * factor + dc];
        dst[static_cast<std::size_t>(r) * out.width + c] = static_cast<float>(acc / area);
      }
    }
  }
  return out;
}

Tensor<float> concat_latent(const Tensor<float>& z_t, const LatentCondition& cond) {
  require(z_t.ndim() == 3, Errc::dimension_mismatch, "latent must be [c, h, w]");
  require(z_t.dim(1) == static_cast<std::uint64_t>(cond.height) &&
              z_t.dim(2) == static_cast<std::uint64_t>(cond.width),
          Errc::dimension_mismatch, "latent and condition spatial dims differ");
  Tensor<float> out;
  out.shape = {z_t.dim(0) + static_cast<std::uint64_t>(cond.channels), z_t.dim(1), z_t.dim(2)};
  out.data.reserve(z_t.data.size() + cond.data.data.size());
  out.data.insert(out.data.end(), z_t.data.begin(), z_t.data.end());
  out.data.insert(out.data.end(), cond.data.data.begin(), cond.data.data.end());
  return out;
}

}  // namespace histoforge
