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

#ifndef LAD_SCENE_OBJECTS_HPP_
#define LAD_SCENE_OBJECTS_HPP_

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lad/common.hpp"
#include "lad/tensor_store.hpp"

namespace lad {

/// An object's soft mask and masked feature map at upsampled resolution.
struct ObjectRecord {
  std::size_t object_id = 0;
  Grid<float> mask_hi;  // values in [0, 1]
  BBox bbox_hi;         // tight box over mask_hi > 0.5
  FeatureMap feat;      // upsampled map * mask_hi
};

inline constexpr float kMaskThreshold = 0.5f;

struct AreaThresholds {
  std::size_t min_area = 0;
  std::size_t max_area = std::numeric_limits<std::size_t>::max();
};

/// Converts fractions of the image area to pixel counts.
AreaThresholds area_thresholds(double min_frac, double max_frac, std::size_t height,
                               std::size_t width);

/// Keeps pages with min_area <= area <= max_area, in order.
std::vector<MaskPage> filter_masks(std::span<const MaskPage> masks, const AreaThresholds& limits);

class DegenerateObjectError : public DataError {
 public:
  DegenerateObjectError(std::size_t object_id, const std::string& what)
      : DataError(what), object_id_(object_id) {}
  std::size_t object_id() const { return object_id_; }

 private:
  std::size_t object_id_;
};

/// Bilinearly resizes each mask to the map resolution and multiplies it in.
/// Record ids are the mask positions in `masks`.
std::vector<ObjectRecord> object_feature_maps(std::span<const MaskPage> masks,
                                              const FeatureMap& up);

/// Tight bounding box of cells above `threshold`, if any.
std::optional<BBox> threshold_bbox(const Grid<float>& grid, float threshold);

}  // namespace lad

#endif  // LAD_SCENE_OBJECTS_HPP_
