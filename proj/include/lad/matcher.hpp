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

#ifndef LAD_MATCHER_HPP_
#define LAD_MATCHER_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lad/dcga.hpp"

namespace lad {

/// M x N inner products of unit descriptors.
using ScoreMatrix = Eigen::MatrixXd;

ScoreMatrix score_matrix(const DescriptorSet& dq, const DescriptorSet& dr);

struct SinkhornParams {
  double bin_score = 0.5;
  int iters = 100;
  double tol = 1e-6;
  // Scores and bin are divided by this before exponentiation.
  double temperature = 1.0;
};

/// Transport plan over the score matrix augmented with a trash-bin row and
/// column. The last row and column of `augmented` are the bins.
struct TransportPlan {
  Eigen::MatrixXd augmented;
  int iterations = 0;
  bool converged = false;
  double max_violation = 0.0;

  Eigen::Index query_count() const { return augmented.rows() - 1; }
  Eigen::Index ref_count() const { return augmented.cols() - 1; }
  Eigen::MatrixXd interior() const {
    return augmented.topLeftCorner(query_count(), ref_count());
  }
};

/// Log-domain Sinkhorn with row masses (1,...,1,N) and column masses
/// (1,...,1,M); the bins absorb whatever mass is left unmatched.
TransportPlan sinkhorn_assign(const ScoreMatrix& scores, const SinkhornParams& params);

struct Match {
  std::size_t query_idx = 0;
  std::size_t ref_idx = 0;
  double confidence = 0.0;
};

struct UnmatchedQuery {
  std::size_t query_idx = 0;
  std::optional<std::size_t> nearest_ref_idx;  // empty when there are no refs
  double confidence = 0.0;
};

struct Assignment {
  std::size_t query_count = 0;
  std::size_t ref_count = 0;
  std::vector<Match> matched;
  std::vector<UnmatchedQuery> unmatched_query;
  std::vector<std::size_t> unmatched_ref;

  const Match* match_for(std::size_t query_idx) const;
  const UnmatchedQuery* unmatched_for(std::size_t query_idx) const;
};

inline constexpr double kDefaultMatchThreshold = 0.2;

/// Mutual-max hardening of a plan: (i, j) is a match when P_ij is the largest
/// entry of interior row i and of interior column j, reaches `threshold`, and
/// beats row i's bin entry.
Assignment extract_matches(const TransportPlan& plan, double threshold);

nlohmann::json to_json(const Assignment& a);

}  // namespace lad

#endif  // LAD_MATCHER_HPP_
