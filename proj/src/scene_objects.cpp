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

#include "lad/scene_objects.hpp"

#include <algorithm>
#include <cmath>

namespace lad {

AreaThresholds area_thresholds(double min_frac, double max_frac, std::size_t height,
                               std::size_t width) {
  if (!(min_frac >= 0.0) || !(max_frac >= min_frac)) {
    throw ConfigError("mask area fractions must satisfy 0 <= min <= max");
  }
  const double total = static_cast<double>(height * width);
  return AreaThresholds{static_cast<std::size_t>(std::ceil(min_frac * total)),
                        static_cast<std::size_t>(std::floor(std::min(max_frac, 1.0) * total))};
}

std::vector<MaskPage> filter_masks(std::span<const MaskPage> masks, const AreaThresholds& limits) {
  if (limits.min_area > limits.max_area) {
    throw ConfigError("minimum mask area exceeds the maximum");
  }
  std::vector<MaskPage> kept;
  for (const auto& m : masks) {
    if (m.area >= limits.min_area && m.area <= limits.max_area) kept.push_back(m);
  }
  return kept;
}

std::optional<BBox> threshold_bbox(const Grid<float>& grid, float threshold) {
  std::size_t rmin = SIZE_MAX, cmin = SIZE_MAX, rmax = 0, cmax = 0;
  bool any = false;
  for (std::size_t y = 0; y < grid.height(); ++y) {
    for (std::size_t x = 0; x < grid.width(); ++x) {
      if (!(grid.at(y, x) > threshold)) continue;
      any = true;
      rmin = std::min(rmin, y);
      cmin = std::min(cmin, x);
      rmax = std::max(rmax, y);
      cmax = std::max(cmax, x);
    }
  }
  if (!any) return std::nullopt;
  return BBox{rmin, cmin, rmax, cmax};
}

std::vector<ObjectRecord> object_feature_maps(std::span<const MaskPage> masks,
                                              const FeatureMap& up) {
  std::vector<ObjectRecord> records;
  if (masks.empty()) return records;
  const std::size_t src_h = masks.front().mask.height(), src_w = masks.front().mask.width();
  const std::size_t h = up.height(), w = up.width();
  for (float v : up.data()) {
    if (!std::isfinite(v)) throw ValidationError("upsampled feature map contains non-finite values");
  }
  records.reserve(masks.size());
  for (std::size_t id = 0; id < masks.size(); ++id) {
    const auto& page = masks[id];
    if (page.mask.height() != src_h || page.mask.width() != src_w) {
      throw ShapeError("object masks do not share one resolution");
    }
    std::vector<float> binary(page.mask.data().begin(), page.mask.data().end());
    Grid<float> soft = resize_bilinear(Grid<float>(src_h, src_w, std::move(binary)), h, w);
    auto bbox = threshold_bbox(soft, kMaskThreshold);
    if (!bbox) {
      throw DegenerateObjectError(id, "object " + std::to_string(id) +
                                          " vanishes after resizing its mask to " +
                                          std::to_string(h) + "x" + std::to_string(w));
    }
    FeatureMap feat(up.channels(), h, w);
    for (std::size_t c = 0; c < up.channels(); ++c) {
      const auto src = up.channel(c);
      auto dst = feat.channel(c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * soft.data()[i];
    }
    records.push_back(ObjectRecord{id, std::move(soft), *bbox, std::move(feat)});
  }
  return records;
}

}  // namespace lad
