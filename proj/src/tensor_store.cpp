// Copyright 2026 The lad Authors.
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

#include "lad/tensor_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

namespace lad {
namespace {

constexpr char kMagic[4] = {'S', 'L', 'T', 'F'};

std::size_t product(const std::vector<std::uint32_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const std::vector<std::uint32_t>& shape, std::size_t length) {
  if (shape.empty() || shape.size() > kMaxRank) {
    throw ShapeError("tensor rank must be between 1 and 4, got " + std::to_string(shape.size()));
  }
  if (std::find(shape.begin(), shape.end(), 0u) != shape.end()) {
    throw ShapeError("tensor dimensions must be >= 1");
  }
  if (product(shape) != length) {
    throw ShapeError("tensor payload length " + std::to_string(length) +
                     " does not match shape product " + std::to_string(product(shape)));
  }
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const std::byte> in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

std::vector<std::uint32_t> to_dims(std::initializer_list<std::size_t> dims) {
  std::vector<std::uint32_t> out;
  for (std::size_t d : dims) {
    if (d > UINT32_MAX) throw ShapeError("dimension does not fit the container");
    out.push_back(static_cast<std::uint32_t>(d));
  }
  return out;
}

}  // namespace

Tensor::Tensor(DType dtype, std::vector<std::uint32_t> shape,
               std::variant<std::vector<float>, std::vector<std::uint8_t>> data)
    : dtype_(dtype), shape_(std::move(shape)), data_(std::move(data)) {}

Tensor Tensor::f32(std::vector<std::uint32_t> shape, std::vector<float> data) {
  check_shape(shape, data.size());
  return Tensor(DType::kF32, std::move(shape), std::move(data));
}

Tensor Tensor::u8(std::vector<std::uint32_t> shape, std::vector<std::uint8_t> data) {
  check_shape(shape, data.size());
  return Tensor(DType::kU8, std::move(shape), std::move(data));
}

std::size_t Tensor::element_count() const { return shape_.empty() ? 0 : product(shape_); }

std::span<const float> Tensor::f32_data() const {
  if (dtype_ != DType::kF32) throw ValidationError("tensor is not f32");
  return std::get<std::vector<float>>(data_);
}

std::span<const std::uint8_t> Tensor::u8_data() const {
  if (dtype_ != DType::kU8) throw ValidationError("tensor is not u8");
  return std::get<std::vector<std::uint8_t>>(data_);
}

bool Tensor::operator==(const Tensor& other) const {
  if (dtype_ != other.dtype_ || shape_ != other.shape_) return false;
  if (dtype_ == DType::kF32) {
    const auto a = f32_data();
    const auto b = other.f32_data();
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
  }
  return std::ranges::equal(u8_data(), other.u8_data());
}

std::vector<std::byte> encode_tensor(const Tensor& t) {
  std::vector<std::byte> out;
  const std::size_t n = t.element_count();
  out.reserve(8 + 4 * t.rank() + n * (t.dtype() == DType::kF32 ? 4 : 1));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(kSltfVersion));
  out.push_back(static_cast<std::byte>(t.dtype()));
  out.push_back(static_cast<std::byte>(t.rank()));
  for (std::uint32_t d : t.shape()) put_u32(out, d);
  if (t.dtype() == DType::kF32) {
    for (float v : t.f32_data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (std::uint8_t v : t.u8_data()) out.push_back(static_cast<std::byte>(v));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes) {
  using Kind = TensorParseError::Kind;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw TensorParseError(Kind::kBadMagic, "not an SLTF file (bad magic)");
  }
  if (bytes.size() < 7) throw TensorParseError(Kind::kTruncated, "SLTF header is truncated");
  const auto version = std::to_integer<std::uint8_t>(bytes[4]);
  if (version != kSltfVersion) {
    throw TensorParseError(Kind::kUnsupportedVersion,
                           "unsupported SLTF version " + std::to_string(version));
  }
  const auto code = std::to_integer<std::uint8_t>(bytes[5]);
  if (code != static_cast<std::uint8_t>(DType::kF32) &&
      code != static_cast<std::uint8_t>(DType::kU8)) {
    throw TensorParseError(Kind::kUnsupportedDtype,
                           "unsupported SLTF dtype code " + std::to_string(code));
  }
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = std::to_integer<std::size_t>(bytes[6]);
  if (rank < 1 || rank > kMaxRank) {
    throw TensorParseError(Kind::kBadRank, "unsupported SLTF rank " + std::to_string(rank));
  }
  std::size_t offset = 7;
  if (bytes.size() < offset + 4 * rank) {
    throw TensorParseError(Kind::kTruncated, "SLTF dimension table is truncated");
  }
  std::vector<std::uint32_t> shape(rank);
  for (std::size_t i = 0; i < rank; ++i, offset += 4) {
    shape[i] = get_u32(bytes.subspan(offset, 4));
    if (shape[i] == 0) throw TensorParseError(Kind::kBadShape, "SLTF dimension of length 0");
  }
  const std::size_t n = product(shape);
  const std::size_t width = dtype == DType::kF32 ? 4 : 1;
  const std::size_t payload = bytes.size() - offset;
  if (payload < n * width) {
    throw TensorParseError(Kind::kTruncated,
                           "SLTF payload is truncated: expected " + std::to_string(n) +
                               " elements, found " + std::to_string(payload / width));
  }
  if (payload != n * width) {
    throw TensorParseError(Kind::kLengthMismatch,
                           "SLTF payload has " + std::to_string(payload - n * width) +
                               " trailing bytes beyond the declared shape");
  }
  if (dtype == DType::kF32) {
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = std::bit_cast<float>(get_u32(bytes.subspan(offset + 4 * i, 4)));
    }
    return Tensor::f32(std::move(shape), std::move(data));
  }
  std::vector<std::uint8_t> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = std::to_integer<std::uint8_t>(bytes[offset + i]);
  return Tensor::u8(std::move(shape), std::move(data));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

Tensor to_tensor(const FeatureMap& map) {
  return Tensor::f32(to_dims({map.channels(), map.height(), map.width()}),
                     std::vector<float>(map.data().begin(), map.data().end()));
}

Tensor to_tensor(const Grid<float>& grid) {
  return Tensor::f32(to_dims({grid.height(), grid.width()}), grid.values());
}

FeatureMap to_feature_map(const Tensor& t) {
  if (t.rank() != 3) throw ShapeError("feature map tensor must have rank 3 (C,H,W)");
  const auto data = t.f32_data();
  return FeatureMap(t.shape()[0], t.shape()[1], t.shape()[2],
                    std::vector<float>(data.begin(), data.end()));
}

Grid<float> to_float_grid(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("grid tensor must have rank 2 (H,W)");
  const auto data = t.f32_data();
  return Grid<float>(t.shape()[0], t.shape()[1], std::vector<float>(data.begin(), data.end()));
}

MaskPage make_mask_page(Grid<std::uint8_t> mask) {
  MaskPage page;
  std::size_t rmin = SIZE_MAX, cmin = SIZE_MAX, rmax = 0, cmax = 0;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      const std::uint8_t v = mask.at(y, x);
      if (v > 1) throw ValidationError("mask page contains non-binary value " + std::to_string(v));
      if (v == 0) continue;
      ++page.area;
      rmin = std::min(rmin, y);
      cmin = std::min(cmin, x);
      rmax = std::max(rmax, y);
      cmax = std::max(cmax, x);
    }
  }
  if (page.area == 0) throw ValidationError("mask page is empty (area must be >= 1)");
  page.bbox = BBox{rmin, cmin, rmax, cmax};
  page.mask = std::move(mask);
  return page;
}

std::vector<MaskPage> mask_pages_from_tensor(const Tensor& t) {
  if (t.dtype() != DType::kU8) throw ValidationError("mask set must be a u8 tensor");
  if (t.rank() != 3) throw ShapeError("mask set must have rank 3 (K,H,W)");
  const std::size_t k = t.shape()[0], h = t.shape()[1], w = t.shape()[2];
  const auto data = t.u8_data();
  std::vector<MaskPage> pages;
  pages.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto page = data.subspan(i * h * w, h * w);
    try {
      pages.push_back(make_mask_page(
          Grid<std::uint8_t>(h, w, std::vector<std::uint8_t>(page.begin(), page.end()))));
    } catch (const ValidationError& e) {
      throw ValidationError("mask page " + std::to_string(i) + ": " + e.what());
    }
  }
  return pages;
}

Tensor mask_set_to_tensor(std::span<const MaskPage> pages) {
  if (pages.empty()) throw ShapeError("cannot store an empty mask set");
  const std::size_t h = pages.front().mask.height(), w = pages.front().mask.width();
  std::vector<std::uint8_t> data;
  data.reserve(pages.size() * h * w);
  for (const auto& page : pages) {
    if (page.mask.height() != h || page.mask.width() != w) {
      throw ShapeError("mask pages differ in resolution");
    }
    data.insert(data.end(), page.mask.data().begin(), page.mask.data().end());
  }
  return Tensor::u8(to_dims({pages.size(), h, w}), std::move(data));
}

std::vector<MaskPage> load_mask_set(const std::filesystem::path& path) {
  return mask_pages_from_tensor(read_tensor(path));
}

}  // namespace lad
