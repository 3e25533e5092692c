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

#include "lad/common.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lad {

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : channels_(channels), height_(height), width_(width),
      data_(channels * height * width, fill) {}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                       std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != channels_ * height_ * width_) {
    throw ShapeError("feature map payload of " + std::to_string(data_.size()) +
                     " values does not match shape " + shape_string());
  }
}

std::string FeatureMap::shape_string() const {
  std::ostringstream out;
  out << '(' << channels_ << ',' << height_ << ',' << width_ << ')';
  return out.str();
}

BBox full_bbox(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("empty plane has no bounding box");
  return BBox{0, 0, height - 1, width - 1};
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// Source taps for each output index along one axis.
std::vector<Tap> axis_taps(std::size_t first, std::size_t extent, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(extent) / static_cast<double>(out);
  const double last = static_cast<double>(first + extent - 1);
  for (std::size_t i = 0; i < out; ++i) {
    double pos = static_cast<double>(first) + (static_cast<double>(i) + 0.5) * scale - 0.5;
    pos = std::clamp(pos, static_cast<double>(first), last);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, first + extent - 1);
    taps[i] = Tap{lo, hi, pos - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

std::vector<float> resample_bilinear(std::span<const float> plane, std::size_t height,
                                     std::size_t width, const BBox& region, std::size_t out_h,
                                     std::size_t out_w) {
  if (plane.size() != height * width) throw ShapeError("plane size does not match its shape");
  if (region.row_max >= height || region.col_max >= width || region.row_min > region.row_max ||
      region.col_min > region.col_max) {
    throw ShapeError("resampling region lies outside the plane");
  }
  if (out_h == 0 || out_w == 0) throw ShapeError("resampling target must be non-empty");

  const auto rows = axis_taps(region.row_min, region.height(), out_h);
  const auto cols = axis_taps(region.col_min, region.width(), out_w);
  std::vector<float> out(out_h * out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& ty = rows[y];
    const float* r0 = plane.data() + ty.lo * width;
    const float* r1 = plane.data() + ty.hi * width;
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = cols[x];
      // Lerp form keeps constant inputs and zero fractions exact.
      const double top = r0[tx.lo] + tx.frac * (static_cast<double>(r0[tx.hi]) - r0[tx.lo]);
      const double bottom = r1[tx.lo] + tx.frac * (static_cast<double>(r1[tx.hi]) - r1[tx.lo]);
      out[y * out_w + x] = static_cast<float>(top + ty.frac * (bottom - top));
    }
  }
  return out;
}

Grid<float> resize_bilinear(const Grid<float>& grid, std::size_t out_h, std::size_t out_w) {
  if (grid.height() == out_h && grid.width() == out_w) return grid;
  return Grid<float>(out_h, out_w,
                     resize_bilinear(grid.data(), grid.height(), grid.width(), out_h, out_w));
}

FeatureMap resize_bilinear(const FeatureMap& map, std::size_t out_h, std::size_t out_w) {
  if (map.height() == out_h && map.width() == out_w) return map;
  std::vector<float> data;
  data.reserve(map.channels() * out_h * out_w);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    auto plane = resize_bilinear(map.channel(c), map.height(), map.width(), out_h, out_w);
    data.insert(data.end(), plane.begin(), plane.end());
  }
  return FeatureMap(map.channels(), out_h, out_w, std::move(data));
}

}  // namespace lad
