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

#ifndef OTLOSS_OT_CORE_HPP_
#define OTLOSS_OT_CORE_HPP_

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace otloss {

using Index = Eigen::Index;

/// A point on the probability simplex. Construction validates nonnegativity
/// and unit mass (absolute tolerance kSumTolerance).
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit ProbVector(Eigen::VectorXd values);

  static ProbVector uniform(Index size);
  static ProbVector one_hot(Index size, Index hot);

  const Eigen::VectorXd& values() const { return values_; }
  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

 private:
  Eigen::VectorXd values_;
};

/// Nonnegative finite transport costs with optional axis labels.
class CostMatrix {
 public:
  explicit CostMatrix(Eigen::MatrixXd entries,
                      std::vector<std::string> row_labels = {},
                      std::vector<std::string> col_labels = {});

  const Eigen::MatrixXd& entries() const { return entries_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }

  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

enum class SinkhornMode {
  kTolerance,        // iterate until the row potential settles
  kFixedIterations,  // exactly fixed_iteration_count sweeps; differentiable
};

struct SinkhornConfig {
  double epsilon = 1.0;
  SinkhornMode mode = SinkhornMode::kTolerance;
  double tolerance = 1e-9;
  int max_iterations = 1000;
  int fixed_iteration_count = 50;

  // Throws ValidationError on a nonpositive field.
  void validate() const;
  bool operator==(const SinkhornConfig&) const = default;
};

/// Output of both Sinkhorn variants. Potentials are the scaling vectors u, v
/// for sinkhorn() and the log-domain potentials f, g for sinkhorn_log();
/// zero-mass entries carry -inf in the log domain.
struct SinkhornResult {
  Eigen::MatrixXd plan;
  Eigen::VectorXd row_potential;
  Eigen::VectorXd col_potential;
  double transport_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Standard-domain Sinkhorn matrix scaling on K = exp(-C / epsilon).
///
/// The stopping rule measures the row scaling in cost units,
/// max_i |epsilon * (log u_new - log u_old)|, so that both domains stop on
/// identical iterates. Requires strictly positive marginals; throws
/// NumericalError when the kernel underflows or a scaling overflows.
SinkhornResult sinkhorn(const ProbVector& a, const ProbVector& b,
                        const CostMatrix& cost, const SinkhornConfig& config);

/// Log-domain Sinkhorn with max-subtracted log-sum-exp reductions.
///
/// Zero-mass rows and columns are masked out of every reduction and their
/// plan entries are exactly zero. epsilon must be at least kMinLogEpsilon.
SinkhornResult sinkhorn_log(const ProbVector& a, const ProbVector& b,
                            const CostMatrix& cost,
                            const SinkhornConfig& config);

inline constexpr double kMinLogEpsilon = 1e-4;

/// Exact Kantorovich optimum on the small instances where it can be
/// enumerated: uniform square marginals with n <= 8 (Birkhoff vertices), or
/// any 2x2 problem (endpoints of the one-parameter feasible segment).
double exact_ot_bruteforce(const ProbVector& a, const ProbVector& b,
                           const CostMatrix& cost);

/// Gradient of sum_ij C_ij P_ij with respect to the logits, where P comes
/// from exactly fixed_iteration_count log-domain sweeps on
/// a = softmax(logits). This is the exact derivative of the unrolled
/// computation, obtained by a reverse sweep over the stored potentials.
Eigen::VectorXd transport_cost_gradient(const Eigen::VectorXd& logits,
                                        const ProbVector& b,
                                        const CostMatrix& cost,
                                        const SinkhornConfig& config);

/// Transport cost and its logit gradient from one forward/backward pass.
struct TransportCostWithGradient {
  double transport_cost = 0.0;
  Eigen::VectorXd gradient;
};

TransportCostWithGradient transport_cost_and_gradient(
    const Eigen::VectorXd& logits, const ProbVector& b, const CostMatrix& cost,
    const SinkhornConfig& config);

/// H(P) = -sum P_ij log P_ij with 0 log 0 = 0.
double plan_entropy(const Eigen::MatrixXd& plan);

/// Largest absolute deviation of the plan's row and column sums from a, b.
double marginal_error(const Eigen::MatrixXd& plan, const ProbVector& a,
                      const ProbVector& b);

/// Numerically stable softmax (max-subtracted).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace otloss

#endif  // OTLOSS_OT_CORE_HPP_
