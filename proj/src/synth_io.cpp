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

#include "lad/synth_io.hpp"

#include <system_error>

#include "lad/image_io.hpp"
#include "lad/tensor_store.hpp"

namespace lad {
namespace fs = std::filesystem;
using nlohmann::json;

SceneRecord write_scene(const SceneBundle& b, const std::string& id, const std::string& category,
                        const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_png(b.image, dir / "image.png");
  write_tensor(to_tensor(b.image), dir / "image.sltf");
  write_tensor(to_tensor(b.features), dir / "features.sltf");
  SceneRecord rec;
  rec.id = id;
  rec.category = category;
  rec.image = dir / "image.sltf";
  rec.features = dir / "features.sltf";
  if (!b.masks.empty()) {
    write_tensor(mask_set_to_tensor(b.masks), dir / "masks.sltf");
    rec.masks = dir / "masks.sltf";
  } else {
    rec.no_objects = true;
  }
  rec.label = b.label;
  rec.gt = dir / "gt.json";

  json gt;
  gt["label"] = b.label;
  gt["anomaly"] = to_string(b.anomaly);
  gt["mask_labels"] = b.mask_labels;
  json regions = json::array();
  if (!b.gt_regions.empty()) {
    std::vector<MaskPage> pages;
    for (std::size_t i = 0; i < b.gt_regions.size(); ++i) {
      pages.push_back(make_mask_page(b.gt_regions[i].mask));
      regions.push_back({{"page", i}, {"saturation_area", b.gt_regions[i].saturation_area}});
    }
    write_tensor(mask_set_to_tensor(pages), dir / "gt_masks.sltf");
    gt["masks"] = "gt_masks.sltf";
  }
  gt["regions"] = std::move(regions);
  json objects = json::array();
  for (const auto& o : b.objects) {
    objects.push_back({{"label", o.label}, {"palette_index", o.palette_index}, {"cell", o.cell}});
  }
  gt["objects"] = std::move(objects);
  write_json(gt, dir / "gt.json");
  return rec;
}

std::uint64_t template_seed(const SuiteSpec& s, std::size_t i) { return s.seed * 100000 + i; }
std::uint64_t normal_seed(const SuiteSpec& s, std::size_t i) { return s.seed * 100000 + 10000 + i; }
std::uint64_t anomaly_seed(const SuiteSpec& s, std::size_t i) {
  return s.seed * 100000 + 20000 + i;
}

SuiteSpec default_suite() {
  SuiteSpec s;
  s.scene.palette = breakfast_palette();
  s.scene.container = true;
  return s;
}

SuiteSpec suite_spec_from_json(const json& j) {
  SuiteSpec s = default_suite();
  try {
    if (j.contains("scene")) {
      json scene = j["scene"];
      if (!scene.contains("container")) scene["container"] = true;
      s.scene = scene_spec_from_json(scene);
    }
    s.category = j.value("category", s.category);
    s.templates = j.value("templates", s.templates);
    s.normal = j.value("normal", s.normal);
    s.seed = j.value("seed", s.seed);
    if (j.contains("anomalous")) {
      s.anomalous.clear();
      for (const auto& item : j["anomalous"].items()) {
        const AnomalyKind kind = parse_anomaly(item.key());
        if (kind == AnomalyKind::kNone) throw SceneSpecError("'none' is not an anomaly type");
        s.anomalous.emplace_back(kind, item.value().get<std::size_t>());
      }
    }
  } catch (const json::exception& e) {
    throw SceneSpecError(std::string("malformed suite spec: ") + e.what());
  }
  if (s.templates == 0) throw SceneSpecError("suite needs at least one template");
  return s;
}

SuiteLayout write_suite(const SuiteSpec& spec, const fs::path& out) {
  SuiteLayout layout{out / "templates", out / "test"};
  auto scene = [&](AnomalyKind kind, std::uint64_t seed) {
    SceneSpec s = spec.scene;
    s.anomaly = kind;
    s.seed = seed;
    return generate_scene(s);
  };
  auto id_for = [](const std::string& prefix, std::size_t i) {
    std::string n = std::to_string(i);
    return prefix + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
  };

  Dataset templates{layout.templates, {}};
  for (std::size_t i = 0; i < spec.templates; ++i) {
    const std::string id = id_for("template_", i);
    templates.records.push_back(write_scene(scene(AnomalyKind::kNone, template_seed(spec, i)), id,
                                            spec.category, layout.templates / id));
  }
  save_dataset(templates, layout.templates);

  Dataset test{layout.test, {}};
  for (std::size_t i = 0; i < spec.normal; ++i) {
    const std::string id = id_for("normal_", i);
    test.records.push_back(write_scene(scene(AnomalyKind::kNone, normal_seed(spec, i)), id,
                                       spec.category, layout.test / id));
  }
  std::size_t a = 0;
  for (const auto& [kind, count] : spec.anomalous) {
    for (std::size_t i = 0; i < count; ++i, ++a) {
      const std::string id = id_for(to_string(kind) + "_", i);
      test.records.push_back(write_scene(scene(kind, anomaly_seed(spec, a)), id, spec.category,
                                         layout.test / id));
    }
  }
  save_dataset(test, layout.test);
  return layout;
}

}  // namespace lad
