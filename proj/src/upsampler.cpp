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

#include "lad/upsampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace lad {
namespace {

std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
}

// Hi-res coordinate of each low-res cell centre along one axis.
std::vector<double> axis_centres(std::size_t n, std::size_t factor) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (static_cast<double>(i) + 0.5) * static_cast<double>(factor) - 0.5;
  }
  return out;
}

double sample_bilinear(std::span<const float> plane, std::size_t height, std::size_t width,
                       double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(height - 1));
  x = std::clamp(x, 0.0, static_cast<double>(width - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, height - 1), x1 = std::min(x0 + 1, width - 1);
  const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
  const double top = plane[y0 * width + x0] + fx * (plane[y0 * width + x1] - plane[y0 * width + x0]);
  const double bottom =
      plane[y1 * width + x0] + fx * (plane[y1 * width + x1] - plane[y1 * width + x0]);
  return top + fy * (bottom - top);
}

}  // namespace

int jbu_kernel_size(float sigma_spatial) {
  return 2 * static_cast<int>(std::ceil(2.0 * sigma_spatial)) + 1;
}

FeatureMap jbu_upsample(const FeatureMap& low, const FeatureMap& guide, const JbuParams& params) {
  if (params.factor < 1) throw ConfigError("upsampling factor must be >= 1");
  if (!(params.sigma_spatial > 0.0f) || !(params.sigma_range > 0.0f)) {
    throw ConfigError("JBU sigmas must be positive");
  }
  const std::size_t f = static_cast<std::size_t>(params.factor);
  const std::size_t h = low.height(), w = low.width(), channels = low.channels();
  if (guide.channels() != 3) throw ShapeError("JBU guide must have 3 channels");
  if (guide.height() != f * h || guide.width() != f * w) {
    throw ShapeError("JBU guide " + guide.shape_string() + " must be factor x the map size " +
                     low.shape_string());
  }
  for (float v : guide.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("JBU guide values must lie in [0, 1]");
  }

  const std::size_t big_h = f * h, big_w = f * w;
  const std::ptrdiff_t radius = (jbu_kernel_size(params.sigma_spatial) - 1) / 2;
  const double inv_2ss = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
  const double inv_2sr =
      std::isinf(params.sigma_range)
          ? 0.0
          : 1.0 / (2.0 * static_cast<double>(params.sigma_range) * params.sigma_range);

  // Guide colour at every low-res cell centre.
  std::vector<std::array<double, 3>> centre_rgb(h * w);
  {
    const auto cy = axis_centres(h, f);
    const auto cx = axis_centres(w, f);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto plane = guide.channel(c);
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          centre_rgb[y * w + x][c] = sample_bilinear(plane, big_h, big_w, cy[y], cx[x]);
        }
      }
    }
  }

  FeatureMap out(channels, big_h, big_w);
  const std::size_t taps = static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1));
  std::vector<double> weight(taps);
  std::vector<std::size_t> cell(taps);
  for (std::size_t oy = 0; oy < big_h; ++oy) {
    const double py = (static_cast<double>(oy) + 0.5) / static_cast<double>(f) - 0.5;
    const auto ny = static_cast<std::ptrdiff_t>(std::floor(py + 0.5));
    for (std::size_t ox = 0; ox < big_w; ++ox) {
      const double px = (static_cast<double>(ox) + 0.5) / static_cast<double>(f) - 0.5;
      const auto nx = static_cast<std::ptrdiff_t>(std::floor(px + 0.5));
      const std::array<double, 3> here{guide.at(0, oy, ox), guide.at(1, oy, ox),
                                       guide.at(2, oy, ox)};
      double total = 0.0;
      std::size_t t = 0;
      for (std::ptrdiff_t dy = -radius; dy <= radius; ++dy) {
        const double oy_off = static_cast<double>(ny + dy) - py;
        const auto sy = static_cast<std::size_t>(clamp_index(ny + dy, h));
        for (std::ptrdiff_t dx = -radius; dx <= radius; ++dx, ++t) {
          const double ox_off = static_cast<double>(nx + dx) - px;
          const auto sx = static_cast<std::size_t>(clamp_index(nx + dx, w));
          const auto& rgb = centre_rgb[sy * w + sx];
          double range2 = 0.0;
          for (int c = 0; c < 3; ++c) range2 += (here[c] - rgb[c]) * (here[c] - rgb[c]);
          const double wgt =
              std::exp(-(oy_off * oy_off + ox_off * ox_off) * inv_2ss - range2 * inv_2sr);
          weight[t] = wgt;
          cell[t] = sy * w + sx;
          total += wgt;
        }
      }
      const std::size_t nearest = static_cast<std::size_t>(clamp_index(ny, h)) * w +
                                  static_cast<std::size_t>(clamp_index(nx, w));
      if (!(total > 0.0)) {
        // Every tap underflowed: fall back to the nearest cell.
        for (std::size_t c = 0; c < channels; ++c) {
          out.at(c, oy, ox) = low.channel(c)[nearest];
        }
        continue;
      }
      for (std::size_t c = 0; c < channels; ++c) {
        const auto plane = low.channel(c);
        const double anchor = plane[nearest];
        double acc = 0.0, lo = anchor, hi = anchor;
        for (std::size_t j = 0; j < taps; ++j) {
          const double v = plane[cell[j]];
          acc += weight[j] * (v - anchor);
          if (weight[j] > 0.0) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
        // Offsets from the anchor keep constant inputs exact; the clamp only
        // absorbs rounding of what is already a convex combination.
        out.at(c, oy, ox) = static_cast<float>(std::clamp(anchor + acc / total, lo, hi));
      }
    }
  }
  return out;
}

}  // namespace lad
