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

#ifndef HISTOFORGE_FTENSOR_HPP
#define HISTOFORGE_FTENSOR_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "histoforge/error.hpp"

namespace histoforge {

/// Dense row-major tensor with an owned buffer.
template <typename T>
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::uint64_t> dims) : shape(std::move(dims)) {
    data.assign(element_count(shape), T{});
  }
  Tensor(std::vector<std::uint64_t> dims, std::vector<T> values)
      : shape(std::move(dims)), data(std::move(values)) {
    require(data.size() == element_count(shape), Errc::dimension_mismatch,
            "tensor payload does not match its shape");
  }

  static std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  std::size_t ndim() const { return shape.size(); }
  std::uint64_t dim(std::size_t i) const { return shape.at(i); }

  bool operator==(const Tensor&) const = default;
};

// FTensor on-disk format:
//   "FTNS" | version u8 = 1 | dtype u8 | ndim u8 | reserved u8 |
//   ndim x u64 LE dims | row-major LE payload
enum class DType : std::uint8_t { f32 = 0, u8 = 1, i32 = 2 };

using AnyTensor = std::variant<Tensor<float>, Tensor<std::uint8_t>, Tensor<std::int32_t>>;

std::vector<std::uint8_t> encode_ftensor(const AnyTensor& tensor);
AnyTensor decode_ftensor(std::span<const std::uint8_t> bytes);

void write_ftensor(const std::filesystem::path& path, const AnyTensor& tensor);
AnyTensor read_ftensor(const std::filesystem::path& path);

DType dtype_of(const AnyTensor& tensor);

/// Reads a tensor and requires a specific dtype.
template <typename T>
Tensor<T> read_ftensor_as(const std::filesystem::path& path) {
  AnyTensor any = read_ftensor(path);
  if (auto* t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  fail(Errc::invalid_argument, "unexpected FTensor dtype in " + path.string());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace histoforge

#endif  // HISTOFORGE_FTENSOR_HPP
