// Copyright 2026 The otloss Authors
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

#ifndef OTLOSS_TESTS_ORACLES_HPP_
#define OTLOSS_TESTS_ORACLES_HPP_

// Test-only reference computations. Nothing here calls into the solver code
// paths it is used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace otloss::oracle {

inline Eigen::VectorXd random_simplex(Eigen::Index n, std::mt19937_64& rng,
                                      double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  v /= v.sum();
  // Push the rounding residue into the largest entry so the sum is 1 to ~1ulp.
  Eigen::Index big = 0;
  v.maxCoeff(&big);
  v[big] += 1.0 - v.sum();
  return v;
}

inline Eigen::MatrixXd random_cost(Eigen::Index n, Eigen::Index m, double hi,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, hi);
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) c(i, j) = u(rng);
  }
  return c;
}

// Entropic 2x2 problem by grid search over the free entry t = P_00.
struct Grid2x2 {
  double t = 0.0;
  Eigen::Matrix2d plan;
  double transport_cost = 0.0;
};

inline Grid2x2 grid_search_2x2(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Matrix2d& c, double eps,
                               double step) {
  const double lo = std::max(0.0, a[0] + b[0] - 1.0);
  const double hi = std::min(a[0], b[0]);
  const auto plan_at = [&](double t) {
    Eigen::Matrix2d p;
    p << t, a[0] - t, b[0] - t, 1.0 - a[0] - b[0] + t;
    return p;
  };
  const auto objective = [&](const Eigen::Matrix2d& p) {
    double v = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        v += c(i, j) * p(i, j);
        if (p(i, j) > 0.0) v += eps * p(i, j) * std::log(p(i, j));
      }
    }
    return v;
  };
  Grid2x2 best;
  double best_value = std::numeric_limits<double>::infinity();
  const long steps = static_cast<long>(std::floor((hi - lo) / step));
  for (long s = 0; s <= steps; ++s) {
    const double t = lo + s * step;
    const Eigen::Matrix2d p = plan_at(t);
    const double v = objective(p);
    if (v < best_value) {
      best_value = v;
      best.t = t;
      best.plan = p;
    }
  }
  best.transport_cost = (c.array() * best.plan.array()).sum();
  return best;
}

// Exact optimum of the uniform square problem by Held-Karp style DP over
// assignment bitmasks: min over permutations of (1/n) sum_i C_{i, sigma(i)}.
inline double assignment_dp(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  std::vector<double> best(1u << n, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const int row = __builtin_popcount(mask);
    if (row >= n || !std::isfinite(best[mask])) continue;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) continue;
      const unsigned next = mask | (1u << j);
      best[next] = std::min(best[next], best[mask] + c(row, j));
    }
  }
  return best[(1u << n) - 1] / n;
}

inline Eigen::VectorXd central_difference(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

// Componentwise relative error with a floor on the denominator: small
// components are compared on the scale of the whole gradient.
inline double gradient_relative_error(const Eigen::VectorXd& got,
                                      const Eigen::VectorXd& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    const double denom = std::max(std::abs(want[i]), 1e-3 * scale);
    worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
  }
  return worst;
}

// Recall@K hits and counts by direct enumeration: sort each group's
// (score desc, id asc) pairs and keep the first k.
struct RecallTally {
  std::vector<long> hits;
  std::vector<long> counts;
};

inline RecallTally recall_tally(const std::vector<std::vector<long>>& ids,
                                const std::vector<std::vector<long>>& truth,
                                const std::vector<Eigen::MatrixXd>& scores,
                                long n_classes, long k) {
  RecallTally tally{std::vector<long>(n_classes, 0),
                    std::vector<long>(n_classes, 0)};
  for (std::size_t g = 0; g < ids.size(); ++g) {
    struct Row {
      double score;
      long id;
      bool correct;
    };
    std::vector<Row> rows;
    for (std::size_t r = 0; r < ids[g].size(); ++r) {
      const auto row = scores[g].row(static_cast<Eigen::Index>(r));
      const auto top = std::max_element(row.begin(), row.end());
      const long predicted = static_cast<long>(top - row.begin());
      rows.push_back({*top, ids[g][r], predicted == truth[g][r]});
      ++tally.counts[truth[g][r]];
    }
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
      return x.score != y.score ? x.score > y.score : x.id < y.id;
    });
    for (std::size_t r = 0; r < rows.size() && static_cast<long>(r) < k; ++r) {
      if (!rows[r].correct) continue;
      // The true class of a correct row is its argmax; recover it by id.
      for (std::size_t q = 0; q < ids[g].size(); ++q) {
        if (ids[g][q] == rows[r].id) ++tally.hits[truth[g][q]];
      }
    }
  }
  return tally;
}

}  // namespace otloss::oracle

#endif  // OTLOSS_TESTS_ORACLES_HPP_
