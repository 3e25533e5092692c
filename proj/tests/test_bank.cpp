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
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lad/bank.hpp"
#include "test_util.hpp"

namespace lad {
namespace {

std::vector<NamedFeatureMap> random_maps(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedFeatureMap> maps;
  for (std::size_t i = 0; i < n; ++i) {
    maps.push_back({"t" + std::to_string(100 + i), testing::random_map(c, h, w, rng)});
  }
  return maps;
}

double oracle_distance(const FeatureMap& a, const FeatureMap& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    for (std::size_t y = 0; y < a.height(); ++y) {
      for (std::size_t x = 0; x < a.width(); ++x) {
        const double d = static_cast<double>(a.at(c, y, x)) - b.at(c, y, x);
        s += d * d;
      }
    }
  }
  return std::sqrt(s);
}

// Greedy farthest-point selection recomputing every minimum from scratch.
std::vector<std::size_t> greedy_oracle(const std::vector<FeatureMap>& pts, std::size_t first,
                                       std::size_t m) {
  std::vector<std::size_t> chosen{first};
  while (chosen.size() < m) {
    std::size_t best = pts.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      double nearest = INFINITY;
      for (std::size_t c : chosen) nearest = std::min(nearest, oracle_distance(pts[i], pts[c]));
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

TEST(Bank, SingleMapFlattens) {
  FeatureMap m(2, 2, 2);
  std::iota(m.data().begin(), m.data().end(), 0.0f);
  const std::vector<NamedFeatureMap> maps{{"a", m}};
  const TemplateBank bank = build_bank(maps);
  ASSERT_EQ(bank.size(), 1u);
  EXPECT_EQ(bank.entry(0).flat.size(), 8u);
}

TEST(Bank, ShapeMismatchAndDuplicateIdsRejected) {
  std::vector<NamedFeatureMap> maps{{"a", FeatureMap(2, 3, 3)}, {"b", FeatureMap(3, 3, 3)}};
  EXPECT_THROW(build_bank(maps), ShapeError);
  std::vector<NamedFeatureMap> dup{{"a", FeatureMap(2, 3, 3)}, {"a", FeatureMap(2, 3, 3)}};
  EXPECT_THROW(build_bank(dup), DataError);
  EXPECT_THROW(build_bank(std::vector<NamedFeatureMap>{}), DataError);
}

TEST(Bank, FlatIsRowMajorByIndexArithmetic) {
  const auto maps = random_maps(10, 3, 4, 5, 1);
  const TemplateBank bank = build_bank(maps);
  ASSERT_EQ(bank.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(bank.entry(i).template_id, maps[i].id);
    const auto& flat = bank.entry(i).flat;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 5; ++x) {
          ASSERT_EQ(flat[c * 20 + y * 5 + x], maps[i].map.at(c, y, x));
        }
      }
    }
  }
}

TEST(Coreset, FullSizeIsIdentity) {
  const TemplateBank bank = build_bank(random_maps(6, 2, 3, 3, 2));
  const TemplateBank sub = coreset_subsample(bank, 6, 99);
  ASSERT_EQ(sub.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(sub.entry(i).template_id, bank.entry(i).template_id);
}

TEST(Coreset, SizeOneIsSeededFirstPick) {
  const TemplateBank bank = build_bank(random_maps(7, 2, 3, 3, 3));
  for (std::uint64_t seed : {0ull, 1ull, 42ull}) {
    std::mt19937_64 rng(seed);
    const std::size_t expect = rng() % 7;
    const TemplateBank sub = coreset_subsample(bank, 1, seed);
    ASSERT_EQ(sub.size(), 1u);
    EXPECT_EQ(sub.entry(0).template_id, bank.entry(expect).template_id);
  }
}

TEST(Coreset, OutOfRangeRejected) {
  const TemplateBank bank = build_bank(random_maps(3, 1, 2, 2, 4));
  EXPECT_THROW(coreset_subsample(bank, 0, 0), ConfigError);
  EXPECT_THROW(coreset_subsample(bank, 4, 0), ConfigError);
}

TEST(Coreset, PointsOnLineMatchGreedyOracle) {
  const std::vector<float> xs{0.0f, 1.0f, 2.5f, 4.0f, 4.2f, 7.0f, 9.5f, 10.0f};
  std::vector<NamedFeatureMap> maps;
  std::vector<FeatureMap> pts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    maps.push_back({"p" + std::to_string(i), FeatureMap(1, 1, 1, std::vector<float>{xs[i]})});
    pts.push_back(maps.back().map);
  }
  const TemplateBank bank = build_bank(maps);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    std::mt19937_64 rng(seed);
    const auto expect = greedy_oracle(pts, rng() % 8, 3);
    const TemplateBank sub = coreset_subsample(bank, 3, seed);
    std::vector<std::size_t> got;
    for (const auto& e : sub.entries()) got.push_back(*bank.find(e.template_id));
    EXPECT_EQ(got, expect) << "seed " << seed;
    EXPECT_DOUBLE_EQ(covering_radius(bank, got), covering_radius(bank, expect));
  }
}

TEST(Coreset, RandomBanksMatchGreedyOracleAndKeepOrder) {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto maps = random_maps(12, 2, 3, 2, 100 + trial);
    std::vector<FeatureMap> pts;
    for (const auto& m : maps) pts.push_back(m.map);
    const TemplateBank bank = build_bank(maps);
    std::mt19937_64 rng(trial);
    const auto expect = greedy_oracle(pts, rng() % 12, 5);
    const TemplateBank sub = coreset_subsample(bank, 5, trial);
    std::vector<std::size_t> got;
    for (const auto& e : sub.entries()) got.push_back(*bank.find(e.template_id));
    EXPECT_EQ(got, expect);
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
  }
}

double random_subset_radius(const TemplateBank& bank, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> perm(bank.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  perm.resize(m);
  return covering_radius(bank, perm);
}

double coreset_radius(const TemplateBank& bank, std::size_t m, std::uint64_t seed) {
  const TemplateBank sub = coreset_subsample(bank, m, seed);
  std::vector<std::size_t> kept;
  for (const auto& e : sub.entries()) kept.push_back(*bank.find(e.template_id));
  return covering_radius(bank, kept);
}

TEST(Coreset, CoversBetterThanRandomSubsetsMostOfTheTime) {
  // Low-dimensional features, where covering radius discriminates.
  int wins = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const TemplateBank bank = build_bank(random_maps(30, 2, 1, 1, 500 + t));
    if (coreset_radius(bank, 6, t) <= random_subset_radius(bank, 6, 900 + t)) ++wins;
  }
  EXPECT_GE(wins, trials * 9 / 10);
}

TEST(Coreset, BeatsRandomSubsetsOnAverageInHigherDimensions) {
  // Distances concentrate with 30 points in 8-D, so single trials often
  // tie or lose; the mean still favours the greedy picks.
  double ratio = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const TemplateBank bank = build_bank(random_maps(30, 2, 2, 2, 500 + t));
    ratio += coreset_radius(bank, 6, t) / random_subset_radius(bank, 6, 900 + t);
  }
  EXPECT_LT(ratio / trials, 0.97);
}

TEST(Nns, ExactCopyIsRankZero) {
  auto maps = random_maps(5, 3, 2, 2, 6);
  const TemplateBank bank = build_bank(maps);
  const auto r = image_nns(bank, maps[3].map, 2);
  ASSERT_EQ(r.neighbors.size(), 2u);
  EXPECT_EQ(r.neighbors[0].template_id, maps[3].id);
  EXPECT_EQ(r.neighbors[0].distance, 0.0);
}

TEST(Nns, FullKIsSortedAndMatchesBruteForce) {
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const auto maps = random_maps(20, 3, 3, 3, 10 + trial);
    const TemplateBank bank = build_bank(maps);
    std::mt19937_64 rng(trial);
    const FeatureMap q = testing::random_map(3, 3, 3, rng);
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& m : maps) oracle.emplace_back(oracle_distance(q, m.map), m.id);
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t k : {2u, 20u}) {
      const auto r = image_nns(bank, q, k);
      ASSERT_EQ(r.neighbors.size(), k);
      for (std::size_t i = 0; i < k; ++i) {
        EXPECT_EQ(r.neighbors[i].template_id, oracle[i].second);
        EXPECT_NEAR(r.neighbors[i].distance, oracle[i].first, 1e-9);
        EXPECT_EQ(r.neighbors[i].rank, i);
        if (i > 0) {
          EXPECT_LE(r.neighbors[i - 1].distance, r.neighbors[i].distance);
        }
      }
    }
  }
}

TEST(Nns, TiesBreakByIdAndOrderDoesNotMatter) {
  const FeatureMap a(1, 1, 2, std::vector<float>{1.0f, 0.0f});
  const FeatureMap b(1, 1, 2, std::vector<float>{0.0f, 1.0f});
  const FeatureMap q(1, 1, 2, std::vector<float>{0.0f, 0.0f});
  std::vector<NamedFeatureMap> fwd{{"zeta", a}, {"alpha", b}, {"mid", FeatureMap(1, 1, 2, 3.0f)}};
  std::vector<NamedFeatureMap> rev(fwd.rbegin(), fwd.rend());
  const auto r1 = image_nns(build_bank(fwd), q, 3);
  const auto r2 = image_nns(build_bank(rev), q, 3);
  ASSERT_EQ(r1.neighbors[0].template_id, "alpha");
  EXPECT_EQ(r1.neighbors[1].template_id, "zeta");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r1.neighbors[i].template_id, r2.neighbors[i].template_id);
    EXPECT_EQ(r1.neighbors[i].distance, r2.neighbors[i].distance);
  }
}

TEST(Nns, Errors) {
  const TemplateBank bank = build_bank(random_maps(3, 2, 2, 2, 7));
  EXPECT_THROW(image_nns(bank, FeatureMap(2, 2, 2), 4), ConfigError);
  EXPECT_THROW(image_nns(bank, FeatureMap(2, 3, 2), 1), ShapeError);
}

TEST(Distance, MetricIdentities) {
  std::mt19937_64 rng(8);
  const FeatureMap a = testing::random_map(2, 3, 3, rng), b = testing::random_map(2, 3, 3, rng);
  EXPECT_EQ(euclidean_distance(a.data(), a.data()), 0.0);
  EXPECT_EQ(euclidean_distance(a.data(), b.data()), euclidean_distance(b.data(), a.data()));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(BankIo, SaveLoadRoundTripAndIdempotentManifest) {
  const auto dir = testing::temp_dir("bank_io");
  const auto maps = random_maps(3, 2, 4, 4, 9);
  const TemplateBank bank = build_bank(maps);
  std::map<std::string, TemplateAssetData> assets;
  assets["t100"].image = Tensor::f32({3, 2, 2}, std::vector<float>(12, 0.5f));
  save_bank(bank, dir / "b", assets);
  const std::string first = slurp(dir / "b" / "manifest.json");
  save_bank(bank, dir / "b", assets);
  EXPECT_EQ(slurp(dir / "b" / "manifest.json"), first);

  const LoadedBank loaded = load_bank(dir / "b");
  ASSERT_EQ(loaded.bank.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(loaded.bank.entry(i).template_id, maps[i].id);
    EXPECT_EQ(loaded.bank.feature_map(i), maps[i].map);
  }
  ASSERT_TRUE(loaded.assets.at("t100").image.has_value());
  EXPECT_FALSE(loaded.assets.at("t101").image.has_value());
  EXPECT_FALSE(loaded.assets.at("t100").masks.has_value());
}

TEST(BankIo, MissingManifestIsIoError) {
  EXPECT_THROW(load_bank("/nonexistent/bank"), IoError);
}

}  // namespace
}  // namespace lad
