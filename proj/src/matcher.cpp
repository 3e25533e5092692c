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

#include "lad/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lad {
namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& v) {
  const double peak = v.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  return peak + std::log((v - peak).exp().sum());
}

}  // namespace

ScoreMatrix score_matrix(const DescriptorSet& dq, const DescriptorSet& dr) {
  if (dq.cols() != dr.cols()) {
    throw ShapeError("descriptor widths differ: " + std::to_string(dq.cols()) + " vs " +
                     std::to_string(dr.cols()));
  }
  return dq * dr.transpose();
}

TransportPlan sinkhorn_assign(const ScoreMatrix& scores, const SinkhornParams& params) {
  if (params.iters < 1) throw ConfigError("Sinkhorn needs at least one iteration");
  if (!(params.tol > 0.0)) throw ConfigError("Sinkhorn tolerance must be positive");
  if (!(params.temperature > 0.0)) throw ConfigError("Sinkhorn temperature must be positive");
  if (!scores.allFinite() || !std::isfinite(params.bin_score)) {
    throw DataError("score matrix contains non-finite values");
  }
  const Eigen::Index m = scores.rows(), n = scores.cols();
  TransportPlan plan;
  plan.augmented = Eigen::MatrixXd::Zero(m + 1, n + 1);
  if (m == 0 || n == 0) {
    // Nothing to transport between the two sides; everything goes to a bin.
    plan.augmented.col(n).head(m).setOnes();
    plan.augmented.row(m).head(n).setOnes();
    plan.converged = true;
    return plan;
  }

  Eigen::MatrixXd kernel = Eigen::MatrixXd::Constant(m + 1, n + 1, params.bin_score);
  kernel.topLeftCorner(m, n) = scores;
  kernel /= params.temperature;

  Eigen::ArrayXd log_mu = Eigen::ArrayXd::Zero(m + 1);
  Eigen::ArrayXd log_nu = Eigen::ArrayXd::Zero(n + 1);
  log_mu(m) = std::log(static_cast<double>(n));
  log_nu(n) = std::log(static_cast<double>(m));
  const Eigen::ArrayXd mu = log_mu.exp();

  Eigen::ArrayXd u = Eigen::ArrayXd::Zero(m + 1);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(n + 1);
  for (int it = 1; it <= params.iters; ++it) {
    for (Eigen::Index i = 0; i <= m; ++i) {
      u(i) = log_mu(i) - log_sum_exp(kernel.row(i).transpose().array() + v);
    }
    for (Eigen::Index j = 0; j <= n; ++j) {
      v(j) = log_nu(j) - log_sum_exp(kernel.col(j).array() + u);
    }
    // Columns are exact after the v update; rows carry the residual.
    plan.augmented = (kernel.array().colwise() + u).rowwise() + v.transpose();
    plan.augmented = plan.augmented.array().exp().matrix();
    plan.iterations = it;
    plan.max_violation = (plan.augmented.rowwise().sum().array() - mu).abs().maxCoeff();
    if (plan.max_violation < params.tol) {
      plan.converged = true;
      break;
    }
  }
  return plan;
}

const Match* Assignment::match_for(std::size_t query_idx) const {
  for (const auto& m : matched) {
    if (m.query_idx == query_idx) return &m;
  }
  return nullptr;
}

const UnmatchedQuery* Assignment::unmatched_for(std::size_t query_idx) const {
  for (const auto& u : unmatched_query) {
    if (u.query_idx == query_idx) return &u;
  }
  return nullptr;
}

Assignment extract_matches(const TransportPlan& plan, double threshold) {
  const Eigen::Index m = plan.query_count(), n = plan.ref_count();
  const Eigen::MatrixXd& p = plan.augmented;
  Assignment out;
  out.query_count = static_cast<std::size_t>(m);
  out.ref_count = static_cast<std::size_t>(n);

  // Lowest index wins ties.
  auto row_argmax = [&](Eigen::Index i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
      if (p(i, j) > p(i, best)) best = j;
    }
    return best;
  };
  auto col_argmax = [&](Eigen::Index j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < m; ++i) {
      if (p(i, j) > p(best, j)) best = i;
    }
    return best;
  };

  std::vector<bool> ref_used(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (n == 0) {
      out.unmatched_query.push_back(UnmatchedQuery{static_cast<std::size_t>(i), std::nullopt, 0.0});
      continue;
    }
    const Eigen::Index j = row_argmax(i);
    const double value = p(i, j);
    const bool mutual = col_argmax(j) == i;
    if (mutual && value >= threshold && value > p(i, n)) {
      out.matched.push_back(Match{static_cast<std::size_t>(i), static_cast<std::size_t>(j), value});
      ref_used[static_cast<std::size_t>(j)] = true;
    } else {
      out.unmatched_query.push_back(
          UnmatchedQuery{static_cast<std::size_t>(i), static_cast<std::size_t>(j), value});
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!ref_used[static_cast<std::size_t>(j)]) out.unmatched_ref.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

nlohmann::json to_json(const Assignment& a) {
  nlohmann::json out;
  out["query_count"] = a.query_count;
  out["ref_count"] = a.ref_count;
  auto& matched = out["matched"] = nlohmann::json::array();
  for (const auto& m : a.matched) {
    matched.push_back({{"query", m.query_idx}, {"ref", m.ref_idx}, {"confidence", m.confidence}});
  }
  auto& unmatched = out["unmatched_query"] = nlohmann::json::array();
  for (const auto& u : a.unmatched_query) {
    nlohmann::json rec{{"query", u.query_idx}, {"confidence", u.confidence}};
    rec["nearest_ref"] = u.nearest_ref_idx ? nlohmann::json(*u.nearest_ref_idx) : nlohmann::json();
    unmatched.push_back(std::move(rec));
  }
  out["unmatched_ref"] = a.unmatched_ref;
  return out;
}

}  // namespace lad
