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

#include "otloss/loss.hpp"

#include <cmath>
#include <string>

#include "otloss/error.hpp"

namespace otloss {

namespace {

double reduction_scale(Reduction reduction, Index batch_size) {
  return reduction == Reduction::kMean ? 1.0 / static_cast<double>(batch_size)
                                       : 1.0;
}

void check_square_cost(const Batch& batch, const CostMatrix& cost) {
  if (cost.rows() != batch.classes() || cost.cols() != batch.classes()) {
    throw ValidationError("cost matrix is " + std::to_string(cost.rows()) +
                          "x" + std::to_string(cost.cols()) + " but batch has " +
                          std::to_string(batch.classes()) + " classes");
  }
}

}  // namespace

Batch::Batch(Eigen::MatrixXd logits, std::vector<Index> targets)
    : logits_(std::move(logits)), targets_(std::move(targets)) {
  if (logits_.rows() < 1 || logits_.cols() < 1) {
    throw ValidationError("batch needs at least one item and one class");
  }
  if (static_cast<Index>(targets_.size()) != logits_.rows()) {
    throw ValidationError("batch has " + std::to_string(logits_.rows()) +
                          " logit rows but " + std::to_string(targets_.size()) +
                          " targets");
  }
  for (Index t : targets_) {
    if (t < 0 || t >= logits_.cols()) {
      throw ValidationError("target index " + std::to_string(t) +
                            " out of range");
    }
  }
  if (!logits_.allFinite()) throw ValidationError("non-finite logits");
}

LossValue ot_loss(const Batch& batch, const CostMatrix& cost,
                  const SinkhornConfig& config, Reduction reduction) {
  check_square_cost(batch, cost);
  const Index n = batch.classes();
  const double scale = reduction_scale(reduction, batch.size());
  LossValue out;
  out.gradient.resize(batch.size(), n);
  double total = 0.0;
  for (Index k = 0; k < batch.size(); ++k) {
    const ProbVector target = ProbVector::one_hot(n, batch.targets()[k]);
    const TransportCostWithGradient item = transport_cost_and_gradient(
        batch.logits().row(k).transpose(), target, cost, config);
    total += item.transport_cost;
    out.gradient.row(k) = scale * item.gradient.transpose();
  }
  out.value = scale * total;
  return out;
}

LossValue ce_loss(const Batch& batch, Reduction reduction) {
  const double scale = reduction_scale(reduction, batch.size());
  LossValue out;
  out.gradient.resize(batch.size(), batch.classes());
  double total = 0.0;
  for (Index k = 0; k < batch.size(); ++k) {
    const auto z = batch.logits().row(k);
    const Index t = batch.targets()[k];
    const double peak = z.maxCoeff();
    const Eigen::RowVectorXd e = (z.array() - peak).exp().matrix();
    const double sum = e.sum();
    total += -(z[t] - peak - std::log(sum));
    out.gradient.row(k) = e / sum;
    out.gradient(k, t) -= 1.0;
    out.gradient.row(k) *= scale;
  }
  out.value = scale * total;
  return out;
}

LossValue ot_loss_closed_form(const Batch& batch, const CostMatrix& cost,
                              Reduction reduction) {
  check_square_cost(batch, cost);
  const double scale = reduction_scale(reduction, batch.size());
  LossValue out;
  out.gradient.resize(batch.size(), batch.classes());
  double total = 0.0;
  for (Index k = 0; k < batch.size(); ++k) {
    const Eigen::VectorXd a = softmax(batch.logits().row(k).transpose());
    const auto column = cost.entries().col(batch.targets()[k]);
    const double item = a.dot(column);
    total += item;
    out.gradient.row(k) =
        scale * (a.array() * (column.array() - item)).matrix().transpose();
  }
  out.value = scale * total;
  return out;
}

}  // namespace otloss
