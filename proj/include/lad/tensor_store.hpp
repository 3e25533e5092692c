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

#ifndef LAD_TENSOR_STORE_HPP_
#define LAD_TENSOR_STORE_HPP_

// SLTF container: "SLTF" | version u8 (=1) | dtype u8 | rank u8 |
// rank x u32 LE dims | row-major LE payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "lad/common.hpp"

namespace lad {

enum class DType : std::uint8_t {
  kF32 = 1,
  kU8 = 2,
};

inline constexpr std::uint8_t kSltfVersion = 1;
inline constexpr std::size_t kMaxRank = 4;

class Tensor {
 public:
  Tensor() = default;

  static Tensor f32(std::vector<std::uint32_t> shape, std::vector<float> data);
  static Tensor u8(std::vector<std::uint32_t> shape, std::vector<std::uint8_t> data);

  DType dtype() const { return dtype_; }
  const std::vector<std::uint32_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t element_count() const;

  std::span<const float> f32_data() const;
  std::span<const std::uint8_t> u8_data() const;

  // Bitwise comparison: NaN payloads compare equal to themselves.
  bool operator==(const Tensor& other) const;

 private:
  Tensor(DType dtype, std::vector<std::uint32_t> shape,
         std::variant<std::vector<float>, std::vector<std::uint8_t>> data);

  DType dtype_ = DType::kF32;
  std::vector<std::uint32_t> shape_;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> data_;
};

class TensorParseError : public DataError {
 public:
  enum class Kind {
    kBadMagic,
    kUnsupportedVersion,
    kUnsupportedDtype,
    kBadRank,
    kBadShape,
    kTruncated,
    kLengthMismatch,
  };

  TensorParseError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

// Conversions between the container and the in-memory grids.
Tensor to_tensor(const FeatureMap& map);
Tensor to_tensor(const Grid<float>& grid);
FeatureMap to_feature_map(const Tensor& t);
Grid<float> to_float_grid(const Tensor& t);

/// One binary object mask with its pixel count and tight bounding box.
struct MaskPage {
  Grid<std::uint8_t> mask;
  std::size_t area = 0;
  BBox bbox;
};

/// Validates a binary 0/1 grid and computes area and bounding box.
MaskPage make_mask_page(Grid<std::uint8_t> mask);

std::vector<MaskPage> mask_pages_from_tensor(const Tensor& t);
Tensor mask_set_to_tensor(std::span<const MaskPage> pages);
std::vector<MaskPage> load_mask_set(const std::filesystem::path& path);

}  // namespace lad

#endif  // LAD_TENSOR_STORE_HPP_
