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

#include "histoforge/ftensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace histoforge {
namespace {

constexpr std::uint8_t kVersion = 1;
constexpr char kMagic[4] = {'F', 'T', 'N', 'S'};
constexpr std::size_t kHeaderSize = 8;
constexpr std::uint8_t kMaxDims = 255;

static_assert(std::endian::native == std::endian::little,
              "FTensor I/O assumes a little-endian host");

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::u8: return 1;
    case DType::i32: return 4;
  }
  fail(Errc::invalid_argument, "unknown dtype");
}

template <typename T>
void append_payload(std::vector<std::uint8_t>& out, const Tensor<T>& t) {
  const std::size_t n = t.data.size() * sizeof(T);
  const std::size_t off = out.size();
  out.resize(off + n);
  if (n) std::memcpy(out.data() + off, t.data.data(), n);
}

template <typename T>
Tensor<T> read_payload(std::vector<std::uint64_t> dims, std::span<const std::uint8_t> payload) {
  Tensor<T> t;
  t.shape = std::move(dims);
  t.data.resize(payload.size() / sizeof(T));
  if (!payload.empty()) std::memcpy(t.data.data(), payload.data(), payload.size());
  return t;
}

}  // namespace

DType dtype_of(const AnyTensor& tensor) {
  switch (tensor.index()) {
    case 0: return DType::f32;
    case 1: return DType::u8;
    default: return DType::i32;
  }
}

std::vector<std::uint8_t> encode_ftensor(const AnyTensor& tensor) {
  return std::visit(
      [&](const auto& t) {
        require(t.shape.size() <= kMaxDims, Errc::invalid_argument, "too many dimensions");
        require(t.data.size() == std::decay_t<decltype(t)>::element_count(t.shape) ||
                    (t.shape.empty() && t.data.empty()),
                Errc::dimension_mismatch, "tensor payload does not match its shape");
        std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
        out.push_back(kVersion);
        out.push_back(static_cast<std::uint8_t>(dtype_of(tensor)));
        out.push_back(static_cast<std::uint8_t>(t.shape.size()));
        out.push_back(0);
        for (std::uint64_t d : t.shape) {
          for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(d >> (8 * b)));
        }
        append_payload(out, t);
        return out;
      },
      tensor);
}

AnyTensor decode_ftensor(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kHeaderSize, Errc::io, "FTensor: truncated header");
  require(std::memcmp(bytes.data(), kMagic, 4) == 0, Errc::io, "FTensor: bad magic");
  require(bytes[4] == kVersion, Errc::io, "FTensor: unsupported version");
  require(bytes[5] <= 2, Errc::io, "FTensor: unknown dtype");
  const auto dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  require(bytes.size() >= kHeaderSize + 8 * ndim, Errc::io, "FTensor: truncated dims");
  std::vector<std::uint64_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    std::uint64_t d = 0;
    for (int b = 0; b < 8; ++b)
      d |= static_cast<std::uint64_t>(bytes[kHeaderSize + 8 * i + b]) << (8 * b);
    dims[i] = d;
  }
  const std::uint64_t count = Tensor<float>::element_count(dims);
  const auto payload = bytes.subspan(kHeaderSize + 8 * ndim);
  require(payload.size() == count * dtype_size(dtype), Errc::io,
          "FTensor: payload size does not match dims");
  switch (dtype) {
    case DType::f32: return read_payload<float>(std::move(dims), payload);
    case DType::u8: return read_payload<std::uint8_t>(std::move(dims), payload);
    case DType::i32: return read_payload<std::int32_t>(std::move(dims), payload);
  }
  fail(Errc::io, "FTensor: unknown dtype");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::io, "short write to " + path.string());
}

void write_ftensor(const std::filesystem::path& path, const AnyTensor& tensor) {
  write_file_bytes(path, encode_ftensor(tensor));
}

AnyTensor read_ftensor(const std::filesystem::path& path) {
  return decode_ftensor(read_file_bytes(path));
}

}  // namespace histoforge
