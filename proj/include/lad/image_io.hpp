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

#ifndef LAD_IMAGE_IO_HPP_
#define LAD_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lad/common.hpp"

namespace lad {

/// Reads an 8-bit PNG as a 3 x H x W map in [0, 1]. Grey and alpha
/// channels are expanded or dropped.
FeatureMap read_png(const std::filesystem::path& path);

/// Writes a 3 x H x W map in [0, 1] as an 8-bit RGB PNG.
void write_png(const FeatureMap& rgb, const std::filesystem::path& path);

/// Map blended over the image with a blue-to-red ramp normalised by `peak`.
FeatureMap heat_overlay(const FeatureMap& image, const Grid<float>& scores, float peak);

}  // namespace lad

#endif  // LAD_IMAGE_IO_HPP_
