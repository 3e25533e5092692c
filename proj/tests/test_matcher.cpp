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
#include <numeric>
#include <random>

#include "lad/matcher.hpp"

namespace lad {
namespace {

Eigen::MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng, double lo = -1,
                              double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd s(m, n);
  for (Eigen::Index i = 0; i < m; ++i) for (Eigen::Index j = 0; j < n; ++j) s(i, j) = u(rng);
  return s;
}

// Direct restatement of the hardening rule, scanning the whole plan.
bool oracle_is_match(const Eigen::MatrixXd& p, Eigen::Index i, Eigen::Index j, double thr) {
  const Eigen::Index m = p.rows() - 1, n = p.cols() - 1;
  for (Eigen::Index jj = 0; jj < n; ++jj) {
    if (p(i, jj) > p(i, j) || (p(i, jj) == p(i, j) && jj < j)) return false;
  }
  for (Eigen::Index ii = 0; ii < m; ++ii) {
    if (p(ii, j) > p(i, j) || (p(ii, j) == p(i, j) && ii < i)) return false;
  }
  return p(i, j) >= thr && p(i, j) > p(i, n);
}

void expect_consistent(const TransportPlan& plan, const Assignment& a, double thr) {
  const Eigen::Index m = plan.query_count(), n = plan.ref_count();
  std::vector<int> seen_q(m, 0), seen_r(n, 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool listed = std::any_of(a.matched.begin(), a.matched.end(), [&](const Match& x) {
        return x.query_idx == static_cast<std::size_t>(i) && x.ref_idx == static_cast<std::size_t>(j);
      });
      EXPECT_EQ(listed, oracle_is_match(plan.augmented, i, j, thr)) << i << "," << j;
    }
  }
  for (const auto& x : a.matched) {
    ++seen_q[x.query_idx];
    ++seen_r[x.ref_idx];
    EXPECT_DOUBLE_EQ(x.confidence, plan.augmented(x.query_idx, x.ref_idx));
  }
  for (const auto& u : a.unmatched_query) ++seen_q[u.query_idx];
  for (auto j : a.unmatched_ref) ++seen_r[j];
  for (int c : seen_q) EXPECT_EQ(c, 1);
  for (int c : seen_r) EXPECT_EQ(c, 1);
}

TEST(ScoreMatrix, MatchesDotProducts) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd q = random_matrix(4, 6, rng), r = random_matrix(3, 6, rng);
  const auto s = score_matrix(q, r);
  ASSERT_EQ(s.rows(), 4);
  ASSERT_EQ(s.cols(), 3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      double d = 0;
      for (int c = 0; c < 6; ++c) d += q(i, c) * r(j, c);
      EXPECT_NEAR(s(i, j), d, 1e-12);
    }
  }
  EXPECT_THROW(score_matrix(q, random_matrix(3, 5, rng)), ShapeError);
}

TEST(Sinkhorn, SingletonStrongScoreMatches) {
  Eigen::MatrixXd s(1, 1);
  s << 10.0;
  SinkhornParams p;
  p.bin_score = 0.0;
  const auto plan = sinkhorn_assign(s, p);
  EXPECT_GT(plan.augmented(0, 0), 0.99);
  const auto a = extract_matches(plan, 0.2);
  ASSERT_EQ(a.matched.size(), 1u);
  EXPECT_TRUE(a.unmatched_ref.empty());
}

TEST(Sinkhorn, EqualScoresGiveSymmetricPlan) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Constant(3, 3, 0.4);
  const auto plan = sinkhorn_assign(s, SinkhornParams{});
  const auto in = plan.interior();
  for (int i = 0; i < 3; ++i) for (int j = 0; j < 3; ++j) EXPECT_NEAR(in(i, j), in(0, 0), 1e-9);
  EXPECT_NEAR(plan.augmented(0, 3), plan.augmented(3, 0), 1e-6);
}

TEST(Sinkhorn, DiagonalScoresGiveIdentityAssignment) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(3, 3, 0.1);
  s.diagonal().setConstant(0.9);
  SinkhornParams p;
  p.temperature = 0.05;
  p.iters = 500;  // this plan needs just over 100 sweeps to reach 1e-6
  const auto plan = sinkhorn_assign(s, p);
  EXPECT_TRUE(plan.converged);
  const auto a = extract_matches(plan, kDefaultMatchThreshold);
  ASSERT_EQ(a.matched.size(), 3u);
  for (const auto& m : a.matched) EXPECT_EQ(m.query_idx, m.ref_idx);
  EXPECT_TRUE(a.unmatched_query.empty());
}

TEST(Sinkhorn, LowScoresFlowToBins) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(2, 2, -1.0);
  SinkhornParams p;
  p.bin_score = 1.0;
  p.temperature = 0.1;
  const auto a = extract_matches(sinkhorn_assign(s, p), kDefaultMatchThreshold);
  EXPECT_TRUE(a.matched.empty());
  EXPECT_EQ(a.unmatched_query.size(), 2u);
  EXPECT_EQ(a.unmatched_ref.size(), 2u);
}

TEST(Sinkhorn, MarginalsAndNonNegativity) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 1 + rng() % 8, n = 1 + rng() % 8;
    SinkhornParams p;
    p.bin_score = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto plan = sinkhorn_assign(random_matrix(m, n, rng), p);
    EXPECT_GE(plan.augmented.minCoeff(), 0.0);
    const Eigen::VectorXd rows = plan.interior().rowwise().sum();
    const Eigen::VectorXd cols = plan.interior().colwise().sum();
    EXPECT_LE(rows.maxCoeff(), 1.0 + 1e-6);
    EXPECT_LE(cols.maxCoeff(), 1.0 + 1e-6);
    // Columns are exact after each sweep; full masses hold once converged.
    const Eigen::VectorXd all_cols = plan.augmented.colwise().sum();
    for (Eigen::Index j = 0; j < n; ++j) EXPECT_NEAR(all_cols(j), 1.0, 1e-9);
    EXPECT_NEAR(all_cols(n), static_cast<double>(m), 1e-9);
    if (plan.converged) {
      const Eigen::VectorXd all_rows = plan.augmented.rowwise().sum();
      for (Eigen::Index i = 0; i < m; ++i) EXPECT_NEAR(all_rows(i), 1.0, 1e-6);
    }
    EXPECT_EQ(plan.converged, plan.max_violation < p.tol);
  }
}

TEST(Sinkhorn, TransposeSymmetryAtConvergence) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 1 + rng() % 6, n = 1 + rng() % 6;
    const Eigen::MatrixXd s = random_matrix(m, n, rng);
    SinkhornParams p;
    p.iters = 2000;
    p.tol = 1e-12;
    const auto a = sinkhorn_assign(s, p), b = sinkhorn_assign(s.transpose(), p);
    EXPECT_NEAR((a.augmented - b.augmented.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-8);
  }
}

TEST(Sinkhorn, RowPermutationEquivariant) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd s = random_matrix(5, 4, rng);
  std::vector<int> perm{2, 4, 0, 1, 3};
  Eigen::MatrixXd sp(5, 4);
  for (int i = 0; i < 5; ++i) sp.row(i) = s.row(perm[i]);
  SinkhornParams p;
  p.iters = 1000;
  p.tol = 1e-12;
  const auto a = sinkhorn_assign(s, p), b = sinkhorn_assign(sp, p);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR((b.augmented.row(i) - a.augmented.row(perm[i])).cwiseAbs().maxCoeff(), 0.0, 1e-9);
  }
}

TEST(Sinkhorn, EmptySidesAndErrors) {
  const auto plan = sinkhorn_assign(Eigen::MatrixXd(2, 0), SinkhornParams{});
  const auto a = extract_matches(plan, 0.2);
  EXPECT_EQ(a.unmatched_query.size(), 2u);
  EXPECT_FALSE(a.unmatched_query[0].nearest_ref_idx.has_value());
  SinkhornParams bad;
  bad.temperature = 0;
  EXPECT_THROW(sinkhorn_assign(Eigen::MatrixXd::Zero(1, 1), bad), ConfigError);
  bad = SinkhornParams{};
  bad.iters = 0;
  EXPECT_THROW(sinkhorn_assign(Eigen::MatrixXd::Zero(1, 1), bad), ConfigError);
  Eigen::MatrixXd nan(1, 1);
  nan << std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(sinkhorn_assign(nan, SinkhornParams{}), DataError);
}

TEST(ExtractMatches, HandBuiltPlan) {
  TransportPlan plan;
  plan.augmented.resize(4, 4);
  // Row 2 points at column 0 but column 0 prefers row 0; row 1 is weak.
  plan.augmented << 0.8, 0.1, 0.0, 0.1,
                    0.0, 0.15, 0.1, 0.75,
                    0.3, 0.0, 0.2, 0.5,
                    0.2, 0.75, 0.7, 0.0;
  const auto a = extract_matches(plan, 0.2);
  ASSERT_EQ(a.matched.size(), 1u);
  EXPECT_EQ(a.matched[0].query_idx, 0u);
  EXPECT_EQ(a.matched[0].ref_idx, 0u);
  ASSERT_EQ(a.unmatched_query.size(), 2u);
  EXPECT_EQ(a.unmatched_for(2)->nearest_ref_idx, 0u);
  EXPECT_EQ(a.unmatched_for(1)->nearest_ref_idx, 1u);
  EXPECT_EQ(a.unmatched_ref, (std::vector<std::size_t>{1, 2}));
  expect_consistent(plan, a, 0.2);
  // Raising the threshold above every entry clears the matches.
  EXPECT_TRUE(extract_matches(plan, 0.9).matched.empty());
}

TEST(ExtractMatches, AgreesWithBruteForceRule) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 1 + rng() % 7, n = 1 + rng() % 7;
    SinkhornParams p;
    p.bin_score = std::uniform_real_distribution<double>(-0.5, 1.0)(rng);
    p.temperature = trial % 2 ? 1.0 : 0.1;
    const auto plan = sinkhorn_assign(random_matrix(m, n, rng), p);
    const double thr = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    const auto a = extract_matches(plan, thr);
    expect_consistent(plan, a, thr);
    EXPECT_EQ(a.matched.size() + a.unmatched_query.size(), static_cast<std::size_t>(m));
  }
}

TEST(ExtractMatches, JsonShape) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
  SinkhornParams p;
  p.temperature = 0.05;
  const auto j = to_json(extract_matches(sinkhorn_assign(s, p), 0.2));
  EXPECT_EQ(j["matched"].size(), 2u);
  EXPECT_EQ(j["query_count"], 2);
  EXPECT_TRUE(j["unmatched_ref"].empty());
}

}  // namespace
}  // namespace lad
