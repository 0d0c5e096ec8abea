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

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "histoforge/conditioning.hpp"
#include "histoforge/error.hpp"
#include "histoforge/grid.hpp"
#include "histoforge/sampling.hpp"

using namespace histoforge;

namespace {

// Every channel value in [1, 255] so pasted crops have full support.
RgbImage textured(int h, int w, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  RgbImage img(h, w);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(1 + gen() % 255);
  return img;
}

SemanticMap two_class(int n) {
  std::vector<std::int32_t> l(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) l[r * n + c] = c < n / 2 ? 0 : 1;
  return SemanticMap(n, n, 2, l, 0);
}

std::vector<std::uint8_t> full_mask(int h, int w) {
  return std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, 1);
}

}  // namespace

TEST_CASE("extract_crop with a full mask and d = H") {
  const auto img = textured(20, 20, 1);
  const auto out = extract_crop(img, full_mask(20, 20), 20, 5);
  CHECK(out.row == 0);
  CHECK(out.col == 0);
  CHECK(out.crop == img);
}

TEST_CASE("extract_crop centers on a single pixel and clamps") {
  const auto img = textured(100, 120, 2);
  for (auto [r, c] : std::vector<std::pair<int, int>>{{50, 60}, {3, 4}, {99, 119}, {10, 100}}) {
    std::vector<std::uint8_t> mask(100 * 120, 0);
    mask[r * 120 + c] = 1;
    const auto out = extract_crop(img, mask, 51, 9);
    CHECK(out.row == std::clamp(r - 25, 0, 100 - 51));
    CHECK(out.col == std::clamp(c - 25, 0, 120 - 51));
    CHECK(out.crop.at(0, 0, 0) == img.at(out.row, out.col, 0));
  }
}

TEST_CASE("extract_crop origins vary by seed and keep the center in the mask") {
  const auto img = textured(64, 64, 3);
  std::vector<std::uint8_t> mask(64 * 64, 0);
  for (int r = 10; r < 50; ++r)
    for (int c = 20; c < 44; ++c) mask[r * 64 + c] = 1;
  std::set<std::pair<int, int>> origins;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = extract_crop(img, mask, 9, seed);
    origins.insert({out.row, out.col});
    CHECK(mask[(out.row + 4) * 64 + out.col + 4] == 1);
  }
  CHECK(origins.size() > 1);
  CHECK_THROWS_AS(extract_crop(img, std::vector<std::uint8_t>(64 * 64, 0), 9, 0), Error);
  CHECK_THROWS_AS(extract_crop(img, mask, 65, 0), Error);
}

TEST_CASE("dihedral transforms") {
  const auto img = textured(7, 7, 4);
  CHECK(apply_transform(img, CropTransform::identity) == img);
  const auto r180 = apply_transform(img, CropTransform::rot180);
  CHECK(apply_transform(r180, CropTransform::rot180) == img);
  for (auto t : {CropTransform::identity, CropTransform::rot90, CropTransform::rot180,
                 CropTransform::rot270, CropTransform::flip_h, CropTransform::flip_v})
    CHECK(apply_transform(apply_transform(img, t), inverse(t)) == img);
  // Counter-clockwise quarter turn: top-right corner moves to top-left.
  const auto r90 = apply_transform(img, CropTransform::rot90);
  CHECK(r90.at(0, 0, 1) == img.at(0, 6, 1));
  CHECK(apply_transform(r90, CropTransform::rot90) == r180);

  const auto h = apply_transform(img, CropTransform::flip_h);
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<int> a(256), b(256);
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) {
        ++a[img.at(r, c, ch)];
        ++b[h.at(r, c, ch)];
      }
    CHECK(a == b);
  }
  CHECK_THROWS_AS(apply_transform(textured(3, 4, 0), CropTransform::rot90), Error);
  for (auto name : {"identity", "rot90", "rot180", "rot270", "flip_h", "flip_v"})
    CHECK(to_string(crop_transform_from_string(name)) == name);
  CHECK_THROWS_AS(crop_transform_from_string("shear"), Error);
}

TEST_CASE("augment_crop selects all transforms and jitters brightness") {
  const auto img = textured(9, 9, 5);
  std::set<CropTransform> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = augment_crop(img, seed);
    seen.insert(a.transform);
    CHECK(a.image == apply_transform(img, a.transform));
    CHECK(a.brightness == 1.0);
  }
  CHECK(seen.size() == 6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = augment_crop(img, seed, 0.1);
    CHECK(a.brightness >= 0.9);
    CHECK(a.brightness <= 1.1);
  }
  CHECK(augment_crop(img, 7, 0.1).image == augment_crop(img, 7, 0.1).image);
}

TEST_CASE("place_crop") {
  const auto crop = textured(5, 5, 6);
  const auto plane = place_crop(12, 10, crop, 3, 4);
  int nonzero = 0;
  for (auto v : plane.pixels) nonzero += v != 0;
  CHECK(nonzero == 3 * 25);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c)
      for (int ch = 0; ch < 3; ++ch) CHECK(plane.at(3 + r, 4 + c, ch) == crop.at(r, c, ch));
  CHECK(place_crop(5, 5, crop, 0, 0) == crop);
  CHECK_THROWS_AS(place_crop(12, 10, crop, 8, 0), Error);
  CHECK_THROWS_AS(place_crop(12, 10, crop, -1, 0), Error);
}

TEST_CASE("build_condition layout and provenance") {
  const auto patch = textured(256, 256, 7);
  const auto map = two_class(256);
  SamplerConfig cfg;
  const auto cond = build_condition(patch, map, cfg, 42, "patch-7");
  CHECK(cond.channels() == 8);
  CHECK(cond.planes.shape == std::vector<std::uint64_t>{8, 256, 256});
  CHECK(check_condition_layout(cond).empty());
  for (int k = 0; k < 2; ++k) {
    const auto& rec = cond.crop_records[k];
    REQUIRE(rec.has_value());
    CHECK(rec->size >= 50);
    CHECK(rec->size <= 200);
    CHECK(rec->source_patch_id == "patch-7");
    // Undo the augmentation and compare to the source region.
    RgbImage pasted(rec->size, rec->size);
    for (int r = 0; r < rec->size; ++r)
      for (int c = 0; c < rec->size; ++c)
        for (int ch = 0; ch < 3; ++ch) {
          const float v = cond.channel(cond.crop_channel(k) + ch)[(rec->row + r) * 256 + rec->col + c];
          pasted.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    const auto restored = apply_transform(pasted, inverse(rec->transform));
    bool same = true;
    for (int r = 0; r < rec->size; ++r)
      for (int c = 0; c < rec->size; ++c)
        for (int ch = 0; ch < 3; ++ch)
          same &= restored.at(r, c, ch) == patch.at(rec->row + r, rec->col + c, ch);
    CHECK(same);
  }
  const auto again = build_condition(patch, map, cfg, 42, "patch-7");
  CHECK(again.planes == cond.planes);
  CHECK(build_condition(patch, map, cfg, 43).planes != cond.planes);
}

TEST_CASE("absent classes get zero crop planes") {
  const auto patch = textured(64, 64, 8);
  std::vector<std::int32_t> l(64 * 64, 0);
  for (int i = 0; i < 64 * 32; ++i) l[i] = 2;
  const SemanticMap map(64, 64, 3, l, 0);
  SamplerConfig cfg;
  cfg.d_min = 20;
  cfg.d_max = 40;
  const auto cond = build_condition(patch, map, cfg, 1);
  CHECK(cond.channels() == 12);
  CHECK_FALSE(cond.crop_records[1].has_value());
  for (int ch = 0; ch < 3; ++ch)
    for (float v : cond.channel(cond.crop_channel(1) + ch)) CHECK(v == 0.0f);
  CHECK(check_condition_layout(cond).empty());
}

TEST_CASE("crop size is capped by the patch") {
  const auto patch = textured(120, 120, 9);
  const auto map = two_class(120);
  SamplerConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cond = build_condition(patch, map, cfg, seed);
    for (const auto& rec : cond.crop_records) {
      REQUIRE(rec.has_value());
      CHECK(rec->size >= 50);
      CHECK(rec->size <= 120);
    }
  }
  CHECK_THROWS_AS(build_condition(textured(40, 40, 1), two_class(40), cfg, 0), Error);
  CHECK_THROWS_AS(build_condition(textured(64, 64, 1), two_class(32), cfg, 0), Error);
}

TEST_CASE("layout checker flags corrupted tensors") {
  const auto patch = textured(64, 64, 10);
  SamplerConfig cfg;
  cfg.d_min = 10;
  cfg.d_max = 20;
  auto cond = build_condition(patch, two_class(64), cfg, 3);
  auto stray = cond;
  const auto& rec = *stray.crop_records[0];
  const int r = rec.row == 0 ? 63 : 0;
  stray.planes.data[static_cast<std::size_t>(stray.crop_channel(0)) * 64 * 64 + r * 64] = 0.5f;
  CHECK_FALSE(check_condition_layout(stray).empty());
  auto notbinary = cond;
  notbinary.planes.data[0] = 0.5f;
  CHECK_FALSE(check_condition_layout(notbinary).empty());
}

TEST_CASE("crop records sidecar round trip") {
  const auto patch = textured(64, 64, 11);
  SamplerConfig cfg;
  cfg.d_min = 10;
  cfg.d_max = 30;
  const auto cond = build_condition(patch, two_class(64), cfg, 5, "src");
  auto back = condition_from_tensor(cond.planes);
  attach_crop_records_json(back, crop_records_json(cond));
  for (int k = 0; k < 2; ++k) {
    CHECK(back.crop_records[k]->row == cond.crop_records[k]->row);
    CHECK(back.crop_records[k]->col == cond.crop_records[k]->col);
    CHECK(back.crop_records[k]->size == cond.crop_records[k]->size);
    CHECK(back.crop_records[k]->transform == cond.crop_records[k]->transform);
    CHECK(back.crop_records[k]->source_patch_id == "src");
  }
  CHECK(check_condition_layout(back).empty());
  CHECK_THROWS_AS(attach_crop_records_json(back, "{}"), Error);
  CHECK_THROWS_AS(condition_from_tensor(Tensor<float>({3, 4, 4})), Error);
}

TEST_CASE("crop bank conditioning") {
  const auto map = two_class(64);
  std::vector<std::optional<BankCrop>> bank(2);
  bank[1] = BankCrop{textured(16, 16, 12), "bank-1"};
  const auto cond = build_condition_from_bank(map, bank, 3);
  CHECK_FALSE(cond.crop_records[0].has_value());
  REQUIRE(cond.crop_records[1].has_value());
  CHECK(cond.crop_records[1]->source_patch_id == "bank-1");
  CHECK(check_condition_layout(cond).empty());
  const auto sem = semantic_only_condition(map);
  for (int ch = 2; ch < 8; ++ch)
    for (float v : sem.channel(ch)) CHECK(v == 0.0f);
}

TEST_CASE("downsample and latent concatenation") {
  const auto patch = textured(256, 256, 13);
  const auto cond = build_condition(patch, two_class(256), SamplerConfig{}, 9);
  const auto same = downsample_condition(cond, 1);
  CHECK(same.data.data == cond.planes.data);
  const auto lat = downsample_condition(cond, 4);
  CHECK(lat.height == 64);
  CHECK(lat.width == 64);
  CHECK(lat.channels == 8);
  for (int ch = 0; ch < 8; ++ch) {
    double a = 0, b = 0;
    for (float v : cond.channel(ch)) a += v;
    for (int i = 0; i < 64 * 64; ++i) b += lat.data.data[ch * 64 * 64 + i];
    CHECK(a / (256.0 * 256.0) == doctest::Approx(b / (64.0 * 64.0)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(downsample_condition(cond, 3), Error);

  ConditioningTensor constant = cond;
  std::fill(constant.planes.data.begin(), constant.planes.data.end(), 0.25f);
  for (float v : downsample_condition(constant, 4).data.data) CHECK(v == 0.25f);

  Tensor<float> z({3, 64, 64});
  for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] = static_cast<float>(i) * 0.001f;
  const auto aug = concat_latent(z, lat);
  CHECK(aug.shape == std::vector<std::uint64_t>{11, 64, 64});
  CHECK(std::equal(z.data.begin(), z.data.end(), aug.data.begin()));
  CHECK(std::equal(lat.data.data.begin(), lat.data.data.end(), aug.data.begin() + z.data.size()));
  CHECK_THROWS_AS(concat_latent(Tensor<float>({3, 32, 64}), lat), Error);
}
