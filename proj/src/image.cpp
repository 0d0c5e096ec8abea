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

#include "histoforge/image.hpp"

#include <png.h>

#include <array>
#include <cstdio>
#include <memory>

#include "histoforge/error.hpp"

namespace histoforge {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  require(f != nullptr, Errc::io, "cannot open " + path.string());
  return f;
}

class PngReader {
 public:
  explicit PngReader(const std::filesystem::path& path) : file_(open_file(path, "rb")), path_(path) {
    std::array<png_byte, 8> sig{};
    require(std::fread(sig.data(), 1, sig.size(), file_.get()) == sig.size() &&
                png_sig_cmp(sig.data(), 0, sig.size()) == 0,
            Errc::io, "not a PNG file: " + path.string());
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png_ != nullptr, Errc::io, "png_create_read_struct failed");
    info_ = png_create_info_struct(png_);
    require(info_ != nullptr, Errc::io, "png_create_info_struct failed");
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  // libpng reports errors via longjmp; callers must invoke setjmp in their
  // own frame, so the read is done here in one function.
  template <typename Configure>
  std::vector<std::uint8_t> read(Configure&& configure, int& height, int& width, int channels) {
    std::vector<std::uint8_t> buffer;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png_))) fail(Errc::io, "corrupt PNG: " + path_.string());
    png_init_io(png_, file_.get());
    png_set_sig_bytes(png_, 8);
    png_read_info(png_, info_);
    configure(png_, info_);
    png_read_update_info(png_, info_);
    width = static_cast<int>(png_get_image_width(png_, info_));
    height = static_cast<int>(png_get_image_height(png_, info_));
    const auto rowbytes = png_get_rowbytes(png_, info_);
    require(rowbytes == static_cast<std::size_t>(width) * channels, Errc::io,
            "unsupported PNG layout: " + path_.string());
    buffer.resize(rowbytes * height);
    rows.resize(height);
    for (int r = 0; r < height; ++r) rows[r] = buffer.data() + rowbytes * r;
    png_read_image(png_, rows.data());
    png_read_end(png_, nullptr);
    return buffer;
  }

 private:
  FilePtr file_;
  std::filesystem::path path_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

void write_png(const std::filesystem::path& path, int height, int width, int color_type,
               const std::uint8_t* data, int channels) {
  require(height > 0 && width > 0, Errc::invalid_argument, "cannot write an empty PNG");
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, Errc::io, "png_create_write_struct failed");
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Errc::io, "PNG write failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    // Distinct, stable palette so label maps stay viewable.
    std::array<png_color, 256> palette{};
    for (int i = 0; i < 256; ++i) {
      palette[i].red = static_cast<png_byte>((i * 73) & 0xFF);
      palette[i].green = static_cast<png_byte>((i * 151) & 0xFF);
      palette[i].blue = static_cast<png_byte>((i * 37 + 90) & 0xFF);
    }
    png_set_PLTE(png, info, palette.data(), 256);
  }
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    rows[r] = const_cast<png_bytep>(data + static_cast<std::size_t>(r) * width * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage::RgbImage(int h, int w) : height(h), width(w) {
  require(h >= 0 && w >= 0, Errc::invalid_argument, "negative image size");
  pixels.assign(static_cast<std::size_t>(h) * w * 3, 0);
}

RgbImage::RgbImage(int h, int w, std::vector<std::uint8_t> rgb)
    : height(h), width(w), pixels(std::move(rgb)) {
  require(h >= 0 && w >= 0 && pixels.size() == static_cast<std::size_t>(h) * w * 3,
          Errc::dimension_mismatch, "RGB buffer does not match image size");
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  PngReader reader(path);
  RgbImage image;
  image.pixels = reader.read(
      [](png_structp png, png_infop info) {
        const auto color = png_get_color_type(png, info);
        if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
          if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
          png_set_gray_to_rgb(png);
        }
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if ((color & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS))
          png_set_strip_alpha(png);
      },
      image.height, image.width, 3);
  return image;
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
  write_png(path, image.height, image.width, PNG_COLOR_TYPE_RGB, image.pixels.data(), 3);
}

IndexedImage read_png_indexed(const std::filesystem::path& path) {
  PngReader reader(path);
  IndexedImage image;
  image.indices = reader.read(
      [&](png_structp png, png_infop info) {
        const auto color = png_get_color_type(png, info);
        require(color == PNG_COLOR_TYPE_PALETTE || color == PNG_COLOR_TYPE_GRAY, Errc::io,
                "label PNG must be indexed or 8-bit grayscale: " + path.string());
        const auto depth = png_get_bit_depth(png, info);
        require(depth <= 8, Errc::io, "label PNG deeper than 8 bits: " + path.string());
        if (depth < 8) png_set_packing(png);
      },
      image.height, image.width, 1);
  return image;
}

void write_png_indexed(const std::filesystem::path& path, const IndexedImage& image) {
  require(image.indices.size() == static_cast<std::size_t>(image.height) * image.width,
          Errc::dimension_mismatch, "index buffer does not match image size");
  write_png(path, image.height, image.width, PNG_COLOR_TYPE_PALETTE, image.indices.data(), 1);
}

}  // namespace histoforge
