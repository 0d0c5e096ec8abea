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

#ifndef HISTOFORGE_IMAGE_HPP
#define HISTOFORGE_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

namespace histoforge {

/// 8-bit interleaved RGB image, row-major (H x W x 3).
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int h, int w);
  RgbImage(int h, int w, std::vector<std::uint8_t> rgb);

  bool empty() const { return height == 0 || width == 0; }
  std::uint8_t& at(int row, int col, int channel) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
  std::uint8_t at(int row, int col, int channel) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }

  bool operator==(const RgbImage&) const = default;
};

/// Single-channel 8-bit grid, used for indexed label PNGs.
struct IndexedImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> indices;
};

RgbImage read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

/// Palette or 8-bit grayscale PNG; palette indices / gray levels are returned
/// verbatim (no palette expansion).
IndexedImage read_png_indexed(const std::filesystem::path& path);
void write_png_indexed(const std::filesystem::path& path, const IndexedImage& image);

}  // namespace histoforge

#endif  // HISTOFORGE_IMAGE_HPP
