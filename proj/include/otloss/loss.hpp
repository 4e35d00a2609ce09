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

#ifndef OTLOSS_LOSS_HPP_
#define OTLOSS_LOSS_HPP_

#include <Eigen/Dense>

#include <vector>

#include "otloss/ot_core.hpp"

namespace otloss {

enum class Reduction { kSum, kMean };

/// B x n logits with one hard target class per row.
class Batch {
 public:
  Batch(Eigen::MatrixXd logits, std::vector<Index> targets);

  const Eigen::MatrixXd& logits() const { return logits_; }
  const std::vector<Index>& targets() const { return targets_; }
  Index size() const { return logits_.rows(); }
  Index classes() const { return logits_.cols(); }

 private:
  Eigen::MatrixXd logits_;
  std::vector<Index> targets_;
};

struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd gradient;  // d value / d logits, same shape as the logits
};

/// Optimal-transport loss: each item's loss is the transport cost between
/// softmax(logits_k) and the one-hot target, computed by fixed-iteration
/// log-domain Sinkhorn. The gradient is the unrolled derivative.
LossValue ot_loss(const Batch& batch, const CostMatrix& cost,
                  const SinkhornConfig& config, Reduction reduction);

/// Softmax cross-entropy, -log softmax(logits_k)[target_k] per item.
LossValue ce_loss(const Batch& batch, Reduction reduction);

/// Closed form of ot_loss for one-hot targets: a one-hot column marginal
/// forces the plan, so each item costs sum_i softmax(logits_k)_i C_{i,t}.
/// Used to cross-check the Sinkhorn route.
LossValue ot_loss_closed_form(const Batch& batch, const CostMatrix& cost,
                              Reduction reduction);

}  // namespace otloss

#endif  // OTLOSS_LOSS_HPP_
