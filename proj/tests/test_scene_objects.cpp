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

#include <limits>
#include <random>

#include "lad/scene_objects.hpp"
#include "lad/synthlab.hpp"
#include "test_util.hpp"

namespace lad {
namespace {

MaskPage rect_page(std::size_t h, std::size_t w, std::size_t r0, std::size_t c0, std::size_t r1,
                   std::size_t c1) {
  Grid<std::uint8_t> g(h, w, 0);
  for (std::size_t y = r0; y <= r1; ++y) {
    for (std::size_t x = c0; x <= c1; ++x) g.at(y, x) = 1;
  }
  return make_mask_page(g);
}

// Forces the area field, so pages of arbitrary size need no pixels.
MaskPage page_with_area(std::size_t area) {
  MaskPage p = rect_page(2, 2, 0, 0, 0, 0);
  p.area = area;
  return p;
}

TEST(FilterMasks, KeepsOnlyPagesInsideThresholds) {
  const std::vector<MaskPage> pages{page_with_area(5), page_with_area(50), page_with_area(5000)};
  const auto kept = filter_masks(pages, AreaThresholds{10, 100});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].area, 50u);
}

TEST(FilterMasks, OpenThresholdsAreIdentityAndFilteringIsIdempotent) {
  std::vector<MaskPage> pages;
  for (std::size_t a : {1u, 7u, 300u, 2u}) pages.push_back(page_with_area(a));
  const auto all = filter_masks(pages, AreaThresholds{0, std::numeric_limits<std::size_t>::max()});
  ASSERT_EQ(all.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(all[i].area, pages[i].area);
  const AreaThresholds t{2, 200};
  const auto once = filter_masks(pages, t);
  const auto twice = filter_masks(once, t);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].area, twice[i].area);
  EXPECT_THROW(filter_masks(pages, AreaThresholds{5, 4}), ConfigError);
}

TEST(FilterMasks, AreaFractionsRoundInward) {
  const auto t = area_thresholds(0.001, 0.95, 100, 100);
  EXPECT_EQ(t.min_area, 10u);
  EXPECT_EQ(t.max_area, 9500u);
  EXPECT_THROW(area_thresholds(0.5, 0.1, 10, 10), ConfigError);
}

TEST(FilterMasks, BreakfastSceneKeepsSixObjects) {
  SceneSpec spec;
  spec.palette = breakfast_palette();
  spec.seed = 3;
  const SceneBundle plain = generate_scene(spec);
  const auto t = area_thresholds(0.001, 0.95, 224, 224);
  EXPECT_EQ(filter_masks(plain.masks, t).size(), 6u);
  // With the tray mask present, a tighter maximum drops it again.
  spec.container = true;
  const SceneBundle tray = generate_scene(spec);
  EXPECT_EQ(tray.masks.size(), 7u);
  EXPECT_EQ(filter_masks(tray.masks, area_thresholds(0.001, 0.3, 224, 224)).size(), 6u);
}

TEST(ObjectMaps, FullMaskReproducesTheMap) {
  std::mt19937_64 rng(1);
  const FeatureMap up = testing::random_map(3, 16, 16, rng);
  const std::vector<MaskPage> pages{rect_page(4, 4, 0, 0, 3, 3)};
  const auto rec = object_feature_maps(pages, up);
  ASSERT_EQ(rec.size(), 1u);
  EXPECT_EQ(rec[0].feat, up);
  EXPECT_EQ(rec[0].bbox_hi, (BBox{0, 0, 15, 15}));
}

TEST(ObjectMaps, LeftHalfMask) {
  const FeatureMap up(2, 16, 16, 2.0f);
  const std::vector<MaskPage> pages{rect_page(4, 4, 0, 0, 3, 1)};
  const auto rec = object_feature_maps(pages, up);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) {
        // The transition band spans one source pixel around the edge.
        if (x < 6) EXPECT_EQ(rec[0].feat.at(c, y, x), 2.0f);
        if (x >= 10) EXPECT_EQ(rec[0].feat.at(c, y, x), 0.0f);
      }
    }
  }
}

TEST(ObjectMaps, RandomMaskMatchesBilinearOracle) {
  std::mt19937_64 rng(2);
  Grid<std::uint8_t> g(7, 9, 0);
  for (auto& v : g.data()) v = rng() % 2;
  g.at(3, 4) = 1;
  const std::vector<MaskPage> pages{make_mask_page(g)};
  const FeatureMap up = testing::random_map(2, 56, 72, rng);
  const auto rec = object_feature_maps(pages, up);
  std::vector<double> plane(g.data().begin(), g.data().end());
  const auto oracle = testing::bilinear_oracle(plane, 7, 9, 0, 0, 7, 9, 56, 72);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    ASSERT_NEAR(rec[0].mask_hi.data()[i], oracle[i], 1e-6);
  }
  // feat is exactly the upsampled map times the soft mask, zero where the mask is zero.
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      const float m = rec[0].mask_hi.data()[i];
      ASSERT_EQ(rec[0].feat.channel(c)[i], up.channel(c)[i] * m);
      if (m == 0.0f) ASSERT_EQ(rec[0].feat.channel(c)[i], 0.0f);
    }
  }
  const auto box = threshold_bbox(rec[0].mask_hi, kMaskThreshold);
  ASSERT_TRUE(box.has_value());
  EXPECT_EQ(rec[0].bbox_hi, *box);
}

TEST(ObjectMaps, RecordsFollowInputOrder) {
  const FeatureMap up(1, 8, 8, 1.0f);
  const std::vector<MaskPage> pages{rect_page(8, 8, 5, 5, 7, 7), rect_page(8, 8, 0, 0, 1, 1)};
  const auto rec = object_feature_maps(pages, up);
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_EQ(rec[0].object_id, 0u);
  EXPECT_EQ(rec[0].bbox_hi, (BBox{5, 5, 7, 7}));
  EXPECT_EQ(rec[1].bbox_hi, (BBox{0, 0, 1, 1}));
}

TEST(ObjectMaps, VanishingMaskNamesTheObject) {
  const FeatureMap up(1, 4, 4, 1.0f);
  const std::vector<MaskPage> pages{rect_page(16, 16, 0, 0, 15, 15), rect_page(16, 16, 0, 0, 0, 0)};
  try {
    object_feature_maps(pages, up);
    FAIL() << "expected a degenerate-object error";
  } catch (const DegenerateObjectError& e) {
    EXPECT_EQ(e.object_id(), 1u);
  }
}

TEST(ObjectMaps, MixedResolutionsRejected) {
  const FeatureMap up(1, 8, 8, 1.0f);
  const std::vector<MaskPage> pages{rect_page(8, 8, 0, 0, 1, 1), rect_page(4, 4, 0, 0, 1, 1)};
  EXPECT_THROW(object_feature_maps(pages, up), ShapeError);
}

}  // namespace
}  // namespace lad
