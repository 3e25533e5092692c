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

#ifndef LAD_SYNTHLAB_HPP_
#define LAD_SYNTHLAB_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lad/common.hpp"
#include "lad/metrics.hpp"
#include "lad/tensor_store.hpp"

namespace lad {

enum class ShapeKind { kCircle, kSquare, kTriangle, kDiamond, kRing, kCross };

struct ObjectClass {
  std::string name;
  ShapeKind shape = ShapeKind::kCircle;
  std::array<float, 3> color{0.5f, 0.5f, 0.5f};
};

enum class LayoutRule { kFixedOrder, kFreePlacement };

enum class AnomalyKind { kNone, kMissing, kExtra, kSwapped, kMoved, kWrongCombo };

/// A grid scene. Palette entries are the objects of a normal scene, placed
/// one per cell; fixed_order fills cells row-major, free_placement picks
/// random cells. Entries sharing a name are the same class.
struct SceneSpec {
  std::size_t rows = 3;
  std::size_t cols = 3;
  std::vector<ObjectClass> palette;
  LayoutRule layout = LayoutRule::kFixedOrder;
  AnomalyKind anomaly = AnomalyKind::kNone;
  std::uint64_t seed = 0;
  std::size_t image_size = 224;
  std::size_t patch = 8;
  // Adds a tray under the grid, segmented as its own object (tray minus
  // the objects on it).
  bool container = false;
  double color_jitter = 0.02;
  double pixel_noise = 0.01;
};

class SceneSpecError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct PlacedObject {
  std::string label;     // correspondence label shared by normal scenes
  std::size_t palette_index = 0;
  std::size_t cell = 0;  // row-major cell index
  std::array<float, 3> color{};
};

struct SceneBundle {
  FeatureMap image;  // 3 x H x W in [0, 1]
  std::vector<MaskPage> masks;
  std::vector<std::string> mask_labels;  // parallel to masks
  FeatureMap features;
  std::vector<GtRegion> gt_regions;
  int label = 0;
  AnomalyKind anomaly = AnomalyKind::kNone;
  std::vector<PlacedObject> objects;
};

SceneBundle generate_scene(const SceneSpec& spec);

inline constexpr std::size_t kToyChannels = 8;

/// Hand-coded patch features: mean R, G, B, edge energy, normalised x,
/// normalised y, mean intensity, intensity variance.
FeatureMap toy_extract(const FeatureMap& image, std::size_t patch);

std::string to_string(AnomalyKind kind);
AnomalyKind parse_anomaly(const std::string& s);
ShapeKind parse_shape(const std::string& s);
std::string to_string(ShapeKind kind);

SceneSpec scene_spec_from_json(const nlohmann::json& j);

/// Six objects on a tray over a 3 x 3 grid, two of them the same class.
std::vector<ObjectClass> breakfast_palette();

}  // namespace lad

#endif  // LAD_SYNTHLAB_HPP_
