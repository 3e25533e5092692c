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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lad/upsampler.hpp"
#include "test_util.hpp"

namespace lad {
namespace {

// Straight evaluation of the bilateral formula at one output pixel.
double jbu_reference(const FeatureMap& low, const FeatureMap& guide, std::size_t ch, std::size_t oy,
                     std::size_t ox, double f, double ss, double sr) {
  const auto h = static_cast<std::ptrdiff_t>(low.height());
  const auto w = static_cast<std::ptrdiff_t>(low.width());
  const int radius = static_cast<int>(std::ceil(2.0 * ss));
  const double py = (oy + 0.5) / f - 0.5, px = (ox + 0.5) / f - 0.5;
  const auto ny = static_cast<std::ptrdiff_t>(std::floor(py + 0.5));
  const auto nx = static_cast<std::ptrdiff_t>(std::floor(px + 0.5));
  std::vector<std::vector<double>> gplanes(3);
  for (int c = 0; c < 3; ++c) {
    auto p = guide.channel(c);
    gplanes[c].assign(p.begin(), p.end());
  }
  double num = 0.0, den = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const std::ptrdiff_t vy = ny + dy, vx = nx + dx;
      const std::ptrdiff_t cy = std::clamp<std::ptrdiff_t>(vy, 0, h - 1);
      const std::ptrdiff_t cx = std::clamp<std::ptrdiff_t>(vx, 0, w - 1);
      double r2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double centre = testing::bilinear_at(gplanes[c], guide.height(), guide.width(),
                                                   (cy + 0.5) * f - 0.5, (cx + 0.5) * f - 0.5);
        const double d = guide.at(c, oy, ox) - centre;
        r2 += d * d;
      }
      const double s2 = (vy - py) * (vy - py) + (vx - px) * (vx - px);
      const double wgt = std::exp(-s2 / (2 * ss * ss) - (std::isinf(sr) ? 0.0 : r2 / (2 * sr * sr)));
      num += wgt * low.at(ch, cy, cx);
      den += wgt;
    }
  }
  return num / den;
}

TEST(Jbu, KernelSize) {
  EXPECT_EQ(jbu_kernel_size(1.0f), 5);
  EXPECT_EQ(jbu_kernel_size(0.5f), 3);
  EXPECT_EQ(jbu_kernel_size(1.2f), 7);
}

TEST(Jbu, ConstantInputIsExact) {
  std::mt19937_64 rng(1);
  for (float value : {0.0f, 1.0f, -3.25f, 0.1f, 12345.678f}) {
    const FeatureMap low(2, 3, 4, value);
    const FeatureMap guide = testing::random_map(3, 24, 32, rng);
    const FeatureMap up = jbu_upsample(low, guide, JbuParams{});
    for (float v : up.data()) ASSERT_EQ(v, value);
  }
}

TEST(Jbu, ExactShapesForEveryFactor) {
  std::mt19937_64 rng(2);
  for (int f : {1, 2, 4, 8, 16}) {
    const FeatureMap low = testing::random_map(3, 2, 3, rng);
    const FeatureMap guide = testing::random_map(3, 2 * f, 3 * f, rng);
    const FeatureMap up = jbu_upsample(low, guide, JbuParams{f, 1.0f, 0.15f});
    EXPECT_EQ(up.channels(), 3u);
    EXPECT_EQ(up.height(), static_cast<std::size_t>(2 * f));
    EXPECT_EQ(up.width(), static_cast<std::size_t>(3 * f));
  }
}

TEST(Jbu, TinySpatialSigmaAtFactorOneIsIdentity) {
  std::mt19937_64 rng(3);
  const FeatureMap low = testing::random_map(4, 5, 6, rng, -2.0f, 2.0f);
  const FeatureMap guide = testing::random_map(3, 5, 6, rng);
  EXPECT_EQ(jbu_upsample(low, guide, JbuParams{1, 1e-3f, 0.15f}), low);
}

TEST(Jbu, StepEdgeIsPreserved) {
  const FeatureMap low(1, 2, 2, std::vector<float>{0, 0, 1, 1});
  FeatureMap guide(3, 8, 8, 0.0f);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 4; y < 8; ++y) {
      for (std::size_t x = 0; x < 8; ++x) guide.at(c, y, x) = 1.0f;
    }
  }
  const FeatureMap up = jbu_upsample(low, guide, JbuParams{4, 1.0f, 0.15f});
  double top = 0.0, bottom = 0.0;
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) (y < 4 ? top : bottom) += up.at(0, y, x);
  }
  EXPECT_LT(top / 32.0, 0.05);
  EXPECT_GT(bottom / 32.0, 0.95);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      EXPECT_NEAR(up.at(0, y, x), jbu_reference(low, guide, 0, y, x, 4, 1.0, 0.15), 1e-6);
    }
  }
}

TEST(Jbu, MatchesDirectFormulaOnRandomInputs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const int f = trial % 2 == 0 ? 2 : 4;
    const float ss = trial < 3 ? 1.0f : 0.7f;
    const FeatureMap low = testing::random_map(2, 3, 4, rng, -1.0f, 1.0f);
    const FeatureMap guide = testing::random_map(3, 3 * f, 4 * f, rng);
    const FeatureMap up = jbu_upsample(low, guide, JbuParams{f, ss, 0.3f});
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t y = 0; y < up.height(); ++y) {
        for (std::size_t x = 0; x < up.width(); ++x) {
          ASSERT_NEAR(up.at(c, y, x), jbu_reference(low, guide, c, y, x, f, ss, 0.3), 1e-5);
        }
      }
    }
  }
}

TEST(Jbu, InfiniteRangeSigmaIgnoresGuide) {
  std::mt19937_64 rng(5);
  const FeatureMap low = testing::random_map(2, 3, 3, rng);
  const float inf = std::numeric_limits<float>::infinity();
  const FeatureMap a = jbu_upsample(low, testing::random_map(3, 12, 12, rng), JbuParams{4, 1.0f, inf});
  const FeatureMap b = jbu_upsample(low, testing::random_map(3, 12, 12, rng), JbuParams{4, 1.0f, inf});
  EXPECT_EQ(a, b);
  const FeatureMap g = testing::random_map(3, 12, 12, rng);
  for (std::size_t y = 0; y < 12; ++y) {
    for (std::size_t x = 0; x < 12; ++x) {
      EXPECT_NEAR(a.at(1, y, x), jbu_reference(low, g, 1, y, x, 4, 1.0, INFINITY), 1e-6);
    }
  }
}

TEST(Jbu, ConvexCombinationBoundOnRandomInputs) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int f = 1 << (trial % 4);
    const std::size_t h = 1 + rng() % 4, w = 1 + rng() % 4;
    const FeatureMap low = testing::random_map(3, h, w, rng, -5.0f, 5.0f);
    const FeatureMap guide = testing::random_map(3, h * f, w * f, rng);
    const FeatureMap up = jbu_upsample(low, guide, JbuParams{f, 0.5f + trial % 3 * 0.5f, 0.05f + 0.1f * (trial % 5)});
    for (std::size_t c = 0; c < 3; ++c) {
      const auto ch = low.channel(c);
      const float lo = *std::min_element(ch.begin(), ch.end());
      const float hi = *std::max_element(ch.begin(), ch.end());
      for (float v : up.channel(c)) {
        ASSERT_TRUE(std::isfinite(v));
        ASSERT_GE(v, lo);
        ASSERT_LE(v, hi);
      }
    }
  }
}

TEST(Jbu, Errors) {
  const FeatureMap low(1, 2, 2);
  EXPECT_THROW(jbu_upsample(low, FeatureMap(3, 8, 8), JbuParams{2, 1.0f, 0.1f}), ShapeError);
  EXPECT_THROW(jbu_upsample(low, FeatureMap(1, 4, 4), JbuParams{2, 1.0f, 0.1f}), ShapeError);
  EXPECT_THROW(jbu_upsample(low, FeatureMap(3, 4, 4), JbuParams{2, 0.0f, 0.1f}), ConfigError);
  EXPECT_THROW(jbu_upsample(low, FeatureMap(3, 4, 4), JbuParams{2, 1.0f, -1.0f}), ConfigError);
  EXPECT_THROW(jbu_upsample(low, FeatureMap(3, 4, 4), JbuParams{0, 1.0f, 0.1f}), ConfigError);
  EXPECT_THROW(jbu_upsample(low, FeatureMap(3, 4, 4, 1.5f), JbuParams{2, 1.0f, 0.1f}), ValidationError);
}

}  // namespace
}  // namespace lad
