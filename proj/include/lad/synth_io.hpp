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

#ifndef LAD_SYNTH_IO_HPP_
#define LAD_SYNTH_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lad/config.hpp"
#include "lad/synthlab.hpp"

namespace lad {

/// Writes one scene into `dir`: image.png, image.sltf, features.sltf,
/// masks.sltf, gt.json and (for anomalies) gt_masks.sltf.
SceneRecord write_scene(const SceneBundle& bundle, const std::string& id,
                        const std::string& category, const std::filesystem::path& dir);

struct SuiteSpec {
  SceneSpec scene;  // base spec; anomaly and seed are set per scene
  std::string category = "synthetic";
  std::size_t templates = 10;
  std::size_t normal = 30;
  std::vector<std::pair<AnomalyKind, std::size_t>> anomalous{
      {AnomalyKind::kMissing, 6}, {AnomalyKind::kExtra, 6}, {AnomalyKind::kSwapped, 6},
      {AnomalyKind::kMoved, 6},   {AnomalyKind::kWrongCombo, 6}};
  std::uint64_t seed = 7;
};

/// Seeds never coincide between the template, normal and anomalous parts.
std::uint64_t template_seed(const SuiteSpec& spec, std::size_t i);
std::uint64_t normal_seed(const SuiteSpec& spec, std::size_t i);
std::uint64_t anomaly_seed(const SuiteSpec& spec, std::size_t i);

SuiteSpec default_suite();
SuiteSpec suite_spec_from_json(const nlohmann::json& j);

struct SuiteLayout {
  std::filesystem::path templates;  // dataset dir of normal templates
  std::filesystem::path test;       // dataset dir of labelled test scenes
};

/// Generates templates and tests under `out` and writes both manifests.
SuiteLayout write_suite(const SuiteSpec& spec, const std::filesystem::path& out);

}  // namespace lad

#endif  // LAD_SYNTH_IO_HPP_
