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

#ifndef LAD_UPSAMPLER_HPP_
#define LAD_UPSAMPLER_HPP_

#include "lad/common.hpp"

namespace lad {

struct JbuParams {
  int factor = 8;
  float sigma_spatial = 1.0f;
  float sigma_range = 0.15f;
};

/// Joint bilateral upsampling of a (C, h, w) map guided by a (3, f*h, f*w)
/// image with values in [0, 1].
///
/// Every output pixel is a convex combination of the K x K low-resolution
/// cells around it, K = 2 * ceil(2 * sigma_spatial) + 1. A cell's weight is
/// the product of a spatial Gaussian over its offset (in low-res cell units)
/// and a range Gaussian over the RGB distance between the guide at the
/// output pixel and the guide bilinearly sampled at the cell centre. Cells
/// beyond the border replicate the edge. sigma_range may be +inf, which
/// switches the range term off.
FeatureMap jbu_upsample(const FeatureMap& low, const FeatureMap& guide, const JbuParams& params);

/// Kernel side length used for a given spatial sigma.
int jbu_kernel_size(float sigma_spatial);

}  // namespace lad

#endif  // LAD_UPSAMPLER_HPP_
