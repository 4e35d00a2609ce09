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

#include "otloss/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "otloss/error.hpp"

namespace otloss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const ProbVector& a, const ProbVector& b,
                  const CostMatrix& cost) {
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    std::ostringstream msg;
    msg << "dimension mismatch: cost is " << cost.rows() << "x" << cost.cols()
        << ", marginals have sizes " << a.size() << " and " << b.size();
    throw ValidationError(msg.str());
  }
}

std::vector<Index> support_of(const Eigen::VectorXd& mass) {
  std::vector<Index> support;
  support.reserve(static_cast<std::size_t>(mass.size()));
  for (Index i = 0; i < mass.size(); ++i) {
    if (mass[i] > 0.0) support.push_back(i);
  }
  return support;
}

// log sum_j exp((g_j - C_ij) / eps) over the column support.
double row_lse(const Eigen::MatrixXd& cost, Index i, const Eigen::VectorXd& g,
               const std::vector<Index>& cols, double inv_eps) {
  // A single term is its own log-sum-exp (peak + log(exp(0)) == peak).
  if (cols.size() == 1) return (g[cols[0]] - cost(i, cols[0])) * inv_eps;
  double peak = kNegInf;
  for (Index j : cols) peak = std::max(peak, (g[j] - cost(i, j)) * inv_eps);
  double sum = 0.0;
  for (Index j : cols) sum += std::exp((g[j] - cost(i, j)) * inv_eps - peak);
  return peak + std::log(sum);
}

// log sum_i exp((f_i - C_ij) / eps) over the row support.
double col_lse(const Eigen::MatrixXd& cost, Index j, const Eigen::VectorXd& f,
               const std::vector<Index>& rows, double inv_eps) {
  if (rows.size() == 1) return (f[rows[0]] - cost(rows[0], j)) * inv_eps;
  double peak = kNegInf;
  for (Index i : rows) peak = std::max(peak, (f[i] - cost(i, j)) * inv_eps);
  double sum = 0.0;
  for (Index i : rows) sum += std::exp((f[i] - cost(i, j)) * inv_eps - peak);
  return peak + std::log(sum);
}

// Log-domain sweeps shared by sinkhorn_log and the unrolled gradient.
// When a history is requested, column k-1 of f_history holds f^k and column k
// of g_history holds g^k (g^0 is the starting point).
struct LogSolver {
  const Eigen::MatrixXd& cost;
  double eps;
  std::vector<Index> rows;
  std::vector<Index> cols;
  Eigen::VectorXd eps_log_a;
  Eigen::VectorXd eps_log_b;

  LogSolver(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
            const Eigen::MatrixXd& c, double epsilon)
      : cost(c), eps(epsilon), rows(support_of(a)), cols(support_of(b)) {
    eps_log_a = Eigen::VectorXd::Constant(a.size(), kNegInf);
    eps_log_b = Eigen::VectorXd::Constant(b.size(), kNegInf);
    for (Index i : rows) eps_log_a[i] = eps * std::log(a[i]);
    for (Index j : cols) eps_log_b[j] = eps * std::log(b[j]);
  }

  struct State {
    Eigen::VectorXd f;
    Eigen::VectorXd g;
    int iterations = 0;
    double last_change = std::numeric_limits<double>::infinity();
  };

  State run(int sweeps, double tolerance, bool stop_early,
            Eigen::MatrixXd* f_history, Eigen::MatrixXd* g_history) const {
    const double inv_eps = 1.0 / eps;
    State s;
    s.f = Eigen::VectorXd::Constant(cost.rows(), kNegInf);
    s.g = Eigen::VectorXd::Constant(cost.cols(), kNegInf);
    for (Index i : rows) s.f[i] = 0.0;
    for (Index j : cols) s.g[j] = 0.0;
    if (f_history != nullptr) {
      f_history->resize(cost.rows(), sweeps);
      g_history->resize(cost.cols(), sweeps);
    }
    for (int k = 0; k < sweeps; ++k) {
      if (g_history != nullptr) g_history->col(k) = s.g;
      double change = 0.0;
      for (Index i : rows) {
        const double updated =
            eps_log_a[i] - eps * row_lse(cost, i, s.g, cols, inv_eps);
        change = std::max(change, std::abs(updated - s.f[i]));
        s.f[i] = updated;
      }
      for (Index j : cols) {
        s.g[j] = eps_log_b[j] - eps * col_lse(cost, j, s.f, rows, inv_eps);
      }
      if (f_history != nullptr) f_history->col(k) = s.f;
      s.iterations = k + 1;
      s.last_change = change;
      if (stop_early && change <= tolerance) break;
    }
    return s;
  }

  Eigen::MatrixXd plan(const State& s) const {
    const double inv_eps = 1.0 / eps;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(cost.rows(), cost.cols());
    for (Index j : cols) {
      for (Index i : rows) {
        p(i, j) = std::exp((s.f[i] + s.g[j] - cost(i, j)) * inv_eps);
      }
    }
    return p;
  }
};

double weighted_cost(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& plan) {
  double total = 0.0;
  for (Index j = 0; j < cost.cols(); ++j) {
    for (Index i = 0; i < cost.rows(); ++i) total += cost(i, j) * plan(i, j);
  }
  return total;
}

int sweep_budget(const SinkhornConfig& config) {
  return config.mode == SinkhornMode::kFixedIterations
             ? config.fixed_iteration_count
             : config.max_iterations;
}

}  // namespace

ProbVector::ProbVector(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 1) {
    throw ValidationError("probability vector must have dimension >= 1");
  }
  double total = 0.0;
  for (Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      std::ostringstream msg;
      msg << "probability vector component " << i << " is " << values_[i]
          << "; components must be finite and >= 0";
      throw ValidationError(msg.str());
    }
    total += values_[i];
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probability vector sums to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
}

ProbVector ProbVector::uniform(Index size) {
  if (size < 1) throw ValidationError("uniform vector needs size >= 1");
  return ProbVector(Eigen::VectorXd::Constant(size, 1.0 / size));
}

ProbVector ProbVector::one_hot(Index size, Index hot) {
  if (hot < 0 || hot >= size) {
    throw ValidationError("one-hot index " + std::to_string(hot) +
                          " out of range for size " + std::to_string(size));
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  v[hot] = 1.0;
  return ProbVector(std::move(v));
}

CostMatrix::CostMatrix(Eigen::MatrixXd entries,
                       std::vector<std::string> row_labels,
                       std::vector<std::string> col_labels)
    : entries_(std::move(entries)),
      row_labels_(std::move(row_labels)),
      col_labels_(std::move(col_labels)) {
  for (Index j = 0; j < entries_.cols(); ++j) {
    for (Index i = 0; i < entries_.rows(); ++i) {
      const double c = entries_(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        std::ostringstream msg;
        msg << "cost entry (" << i << "," << j << ") is " << c
            << "; entries must be finite and >= 0";
        throw ValidationError(msg.str());
      }
    }
  }
  if (!row_labels_.empty() &&
      static_cast<Index>(row_labels_.size()) != entries_.rows()) {
    throw ValidationError("row label count does not match cost rows");
  }
  if (!col_labels_.empty() &&
      static_cast<Index>(col_labels_.size()) != entries_.cols()) {
    throw ValidationError("column label count does not match cost columns");
  }
}

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("sinkhorn epsilon must be a positive finite number");
  }
  if (!(tolerance > 0.0)) {
    throw ValidationError("sinkhorn tolerance must be positive");
  }
  if (max_iterations < 1) {
    throw ValidationError("sinkhorn max_iterations must be >= 1");
  }
  if (fixed_iteration_count < 1) {
    throw ValidationError("sinkhorn fixed_iteration_count must be >= 1");
  }
}

SinkhornResult sinkhorn(const ProbVector& a, const ProbVector& b,
                        const CostMatrix& cost, const SinkhornConfig& config) {
  config.validate();
  check_shapes(a, b, cost);
  if (a.values().minCoeff() <= 0.0 || b.values().minCoeff() <= 0.0) {
    throw ValidationError(
        "standard-domain sinkhorn needs strictly positive marginals; use "
        "sinkhorn_log for zero-mass entries");
  }
  const double eps = config.epsilon;
  // Scalar exp: Eigen's packet exp clamps its argument, hiding underflow.
  const Eigen::MatrixXd kernel = cost.entries().unaryExpr(
      [eps](double c) { return std::exp(-c / eps); });
  const auto fail = [] {
    throw NumericalError(
        "non-finite scaling in standard-domain sinkhorn (exp(-C/epsilon) "
        "under/overflow); use sinkhorn_log");
  };
  if ((kernel.array() <= 0.0).any()) fail();

  Eigen::VectorXd u = Eigen::VectorXd::Ones(a.size());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(b.size());
  Eigen::VectorXd log_u = Eigen::VectorXd::Zero(a.size());
  const bool stop_early = config.mode == SinkhornMode::kTolerance;
  const int budget = sweep_budget(config);

  SinkhornResult result;
  double change = std::numeric_limits<double>::infinity();
  for (int k = 0; k < budget; ++k) {
    u = a.values().array() / (kernel * v).array();
    v = b.values().array() / (kernel.transpose() * u).array();
    if (!u.allFinite() || !v.allFinite() || (u.array() <= 0.0).any() ||
        (v.array() <= 0.0).any()) {
      fail();
    }
    change = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
      const double l = std::log(u[i]);
      change = std::max(change, eps * std::abs(l - log_u[i]));
      log_u[i] = l;
    }
    result.iterations = k + 1;
    if (stop_early && change <= config.tolerance) break;
  }
  result.converged = change <= config.tolerance;
  result.plan = u.asDiagonal() * kernel * v.asDiagonal();
  if (!result.plan.allFinite()) fail();
  result.row_potential = std::move(u);
  result.col_potential = std::move(v);
  result.transport_cost = weighted_cost(cost.entries(), result.plan);
  return result;
}

SinkhornResult sinkhorn_log(const ProbVector& a, const ProbVector& b,
                            const CostMatrix& cost,
                            const SinkhornConfig& config) {
  config.validate();
  check_shapes(a, b, cost);
  if (config.epsilon < kMinLogEpsilon) {
    std::ostringstream msg;
    msg << "epsilon " << config.epsilon
        << " is below the supported floor " << kMinLogEpsilon;
    throw ValidationError(msg.str());
  }
  const LogSolver solver(a.values(), b.values(), cost.entries(),
                         config.epsilon);
  const bool stop_early = config.mode == SinkhornMode::kTolerance;
  LogSolver::State state = solver.run(sweep_budget(config), config.tolerance,
                                      stop_early, nullptr, nullptr);
  SinkhornResult result;
  result.plan = solver.plan(state);
  result.transport_cost = weighted_cost(cost.entries(), result.plan);
  result.iterations = state.iterations;
  result.converged = state.last_change <= config.tolerance;
  result.row_potential = std::move(state.f);
  result.col_potential = std::move(state.g);
  return result;
}

double exact_ot_bruteforce(const ProbVector& a, const ProbVector& b,
                           const CostMatrix& cost) {
  check_shapes(a, b, cost);
  const Index n = a.size();
  const Eigen::MatrixXd& c = cost.entries();
  if (n == 2 && b.size() == 2) {
    // P = [[t, a0 - t], [b0 - t, 1 - a0 - b0 + t]]; linear in t, so the
    // optimum sits at an end of the feasible interval.
    const double lo = std::max(0.0, a[0] + b[0] - 1.0);
    const double hi = std::min(a[0], b[0]);
    const auto objective = [&](double t) {
      return c(0, 0) * t + c(0, 1) * (a[0] - t) + c(1, 0) * (b[0] - t) +
             c(1, 1) * (1.0 - a[0] - b[0] + t);
    };
    return std::min(objective(lo), objective(hi));
  }
  const bool uniform_square =
      b.size() == n && n <= 8 &&
      (a.values().array() == 1.0 / n).all() &&
      (b.values().array() == 1.0 / n).all();
  if (!uniform_square) {
    throw ValidationError(
        "exact_ot_bruteforce supports 2x2 problems or uniform square "
        "marginals with n <= 8");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += c(i, perm[i]);
    best = std::min(best, total / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TransportCostWithGradient transport_cost_and_gradient(
    const Eigen::VectorXd& logits, const ProbVector& b, const CostMatrix& cost,
    const SinkhornConfig& config) {
  config.validate();
  if (config.mode != SinkhornMode::kFixedIterations) {
    throw ValidationError(
        "transport_cost_gradient needs fixed-iterations mode");
  }
  if (cost.rows() != logits.size() || cost.cols() != b.size()) {
    throw ValidationError("dimension mismatch between logits, target and cost");
  }
  if (config.epsilon < kMinLogEpsilon) {
    throw ValidationError("epsilon is below the supported floor");
  }
  const Eigen::VectorXd a = softmax(logits);
  const Eigen::MatrixXd& c = cost.entries();
  const double eps = config.epsilon;
  const double inv_eps = 1.0 / eps;
  const int sweeps = config.fixed_iteration_count;

  const LogSolver solver(a, b.values(), c, eps);
  Eigen::MatrixXd f_hist;
  Eigen::MatrixXd g_hist;
  const LogSolver::State state =
      solver.run(sweeps, config.tolerance, false, &f_hist, &g_hist);
  const Eigen::MatrixXd plan = solver.plan(state);

  TransportCostWithGradient out;
  out.transport_cost = weighted_cost(c, plan);

  const std::vector<Index>& rows = solver.rows;
  const std::vector<Index>& cols = solver.cols;
  const Index n = c.rows();
  const Index m = c.cols();

  // Adjoints of f^k and g^k, seeded by the final plan.
  Eigen::VectorXd f_bar = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g_bar = Eigen::VectorXd::Zero(m);
  for (Index j : cols) {
    for (Index i : rows) {
      const double w = c(i, j) * plan(i, j) * inv_eps;
      f_bar[i] += w;
      g_bar[j] += w;
    }
  }
  // a_i * d(cost)/d(a_i), accumulated over sweeps.
  Eigen::VectorXd mass_adjoint = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g_prev_bar(m);
  std::vector<double> weights(std::max(rows.size(), cols.size()));

  for (int k = sweeps - 1; k >= 0; --k) {
    const auto f_k = f_hist.col(k);
    // g^k_j = eps log b_j - eps LSE_i((f^k_i - C_ij) / eps)
    for (Index j : cols) {
      if (g_bar[j] == 0.0) continue;
      if (rows.size() == 1) {
        f_bar[rows[0]] -= g_bar[j];
        continue;
      }
      double peak = kNegInf;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        weights[r] = (f_k[rows[r]] - c(rows[r], j)) * inv_eps;
        peak = std::max(peak, weights[r]);
      }
      double sum = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        weights[r] = std::exp(weights[r] - peak);
        sum += weights[r];
      }
      const double scale = g_bar[j] / sum;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        f_bar[rows[r]] -= scale * weights[r];
      }
    }
    // f^k_i = eps log a_i - eps LSE_j((g^{k-1}_j - C_ij) / eps)
    const auto g_prev = g_hist.col(k);
    g_prev_bar.setZero();
    for (Index i : rows) {
      mass_adjoint[i] += eps * f_bar[i];
      if (f_bar[i] == 0.0) continue;
      if (cols.size() == 1) {
        g_prev_bar[cols[0]] -= f_bar[i];
        continue;
      }
      double peak = kNegInf;
      for (std::size_t q = 0; q < cols.size(); ++q) {
        weights[q] = (g_prev[cols[q]] - c(i, cols[q])) * inv_eps;
        peak = std::max(peak, weights[q]);
      }
      double sum = 0.0;
      for (std::size_t q = 0; q < cols.size(); ++q) {
        weights[q] = std::exp(weights[q] - peak);
        sum += weights[q];
      }
      const double scale = f_bar[i] / sum;
      for (std::size_t q = 0; q < cols.size(); ++q) {
        g_prev_bar[cols[q]] -= scale * weights[q];
      }
    }
    g_bar.swap(g_prev_bar);
    f_bar.setZero();
  }

  // Back through the softmax: dz_i = a_i (abar_i - <a, abar>).
  const double total = mass_adjoint.sum();
  out.gradient = mass_adjoint - a * total;
  return out;
}

Eigen::VectorXd transport_cost_gradient(const Eigen::VectorXd& logits,
                                        const ProbVector& b,
                                        const CostMatrix& cost,
                                        const SinkhornConfig& config) {
  return transport_cost_and_gradient(logits, b, cost, config).gradient;
}

double plan_entropy(const Eigen::MatrixXd& plan) {
  double h = 0.0;
  for (Index j = 0; j < plan.cols(); ++j) {
    for (Index i = 0; i < plan.rows(); ++i) {
      const double p = plan(i, j);
      if (p > 0.0) h -= p * std::log(p);
    }
  }
  return h;
}

double marginal_error(const Eigen::MatrixXd& plan, const ProbVector& a,
                      const ProbVector& b) {
  const double row = (plan.rowwise().sum() - a.values()).cwiseAbs().maxCoeff();
  const double col =
      (plan.colwise().sum().transpose() - b.values()).cwiseAbs().maxCoeff();
  return std::max(row, col);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

}  // namespace otloss
