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

#ifndef LAD_COMMON_HPP_
#define LAD_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lad {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters supplied by the caller (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be processed (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Row-major 2-D grid, last axis fastest.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width, fill) {}
  Grid(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) {
      throw ShapeError("grid payload does not match its shape");
    }
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(std::size_t y, std::size_t x) { return data_[y * width_ + x]; }
  const T& at(std::size_t y, std::size_t x) const { return data_[y * width_ + x]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

/// Dense C x H x W feature grid, channel-major.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * height_ + y) * width_ + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  std::span<float> channel(std::size_t c) {
    return std::span<float>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const FeatureMap& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  std::string shape_string() const;

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

/// Inclusive pixel bounding box.
struct BBox {
  std::size_t row_min = 0;
  std::size_t col_min = 0;
  std::size_t row_max = 0;
  std::size_t col_max = 0;

  std::size_t height() const { return row_max - row_min + 1; }
  std::size_t width() const { return col_max - col_min + 1; }
  bool operator==(const BBox&) const = default;
};

BBox full_bbox(std::size_t height, std::size_t width);

/// Bilinear resampling of `region` of a height x width plane onto an
/// out_h x out_w grid. Pixel centres are aligned (half-pixel convention) and
/// samples are clamped to the region. A region resampled to its own size is
/// reproduced exactly.
std::vector<float> resample_bilinear(std::span<const float> plane, std::size_t height,
                                     std::size_t width, const BBox& region, std::size_t out_h,
                                     std::size_t out_w);

inline std::vector<float> resize_bilinear(std::span<const float> plane, std::size_t height,
                                          std::size_t width, std::size_t out_h,
                                          std::size_t out_w) {
  return resample_bilinear(plane, height, width, full_bbox(height, width), out_h, out_w);
}

Grid<float> resize_bilinear(const Grid<float>& grid, std::size_t out_h, std::size_t out_w);
FeatureMap resize_bilinear(const FeatureMap& map, std::size_t out_h, std::size_t out_w);

}  // namespace lad

#endif  // LAD_COMMON_HPP_
