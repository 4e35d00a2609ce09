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

#ifndef OTLOSS_HARNESS_HPP_
#define OTLOSS_HARNESS_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "otloss/loss.hpp"
#include "otloss/metrics.hpp"
#include "otloss/ot_core.hpp"
#include "otloss/synth.hpp"

namespace otloss {

enum class LossKind { kCrossEntropy, kOtSum, kOtMean };
enum class ModelKind { kLinear, kMlp };

std::string to_string(LossKind kind);
std::string to_string(ModelKind kind);

struct TrainConfig {
  LossKind loss = LossKind::kCrossEntropy;
  int epochs = 30;
  Index batch_size = 64;
  double learning_rate = 0.05;
  ModelKind model = ModelKind::kLinear;
  Index hidden_width = 32;
  SinkhornConfig sinkhorn{1.0, SinkhornMode::kFixedIterations, 1e-9, 1000, 50};
  std::uint64_t seed = 0;
  Index eval_group_size = 30;
  std::vector<Index> eval_k{5, 15, 30};

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Flat `key = value` text, one entry per line, `#` starts a comment.
/// Duplicate keys are errors.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Unknown keys are errors. Recognised keys:
///   loss (ce | ot-sum | ot-mean), epochs, batch_size, learning_rate,
///   model (linear | mlp), hidden_width, sinkhorn_epsilon,
///   sinkhorn_iterations, seed, eval_group_size, eval_k (comma list)
TrainConfig parse_train_config(const std::map<std::string, std::string>& kv);

///   n_classes, feature_dim, zipf_exponent, train_samples, test_samples,
///   class_spread, centroid_radius, noise_scale, similarity_groups, seed
SynthConfig parse_synth_config(const std::map<std::string, std::string>& kv);

/// Softmax classifier: linear, or one tanh hidden layer.
class Model {
 public:
  Model() = default;
  Model(ModelKind kind, Index inputs, Index hidden, Index classes,
        std::mt19937_64& rng);

  ModelKind kind() const { return kind_; }
  Index inputs() const { return inputs_; }
  Index classes() const { return classes_; }

  /// N x classes logits.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;

  /// One gradient-descent step given d(loss)/d(logits) for the same rows.
  void step(const Eigen::MatrixXd& features, const Eigen::MatrixXd& logit_grad,
            double learning_rate);

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

  bool operator==(const Model& other) const;

 private:
  ModelKind kind_ = ModelKind::kLinear;
  Index inputs_ = 0;
  Index classes_ = 0;
  // Linear: weights_ is classes x inputs. MLP: hidden_weights_ is
  // hidden x inputs and weights_ is classes x hidden.
  Eigen::MatrixXd hidden_weights_;
  Eigen::VectorXd hidden_bias_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

struct RunRecord {
  TrainConfig config;
  std::vector<std::string> labels;
  std::optional<Index> background;
  Model model;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<EvalReport> evaluations;
  std::string eval_fingerprint;  // identifies the evaluation dataset
  std::optional<double> wall_clock_seconds;

  bool operator==(const RunRecord& other) const;
};

nlohmann::json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

/// Mini-batch gradient descent with the configured loss. Batch order is a
/// pure function of config.seed. Throws NumericalError naming the epoch and
/// batch if the loss becomes non-finite.
RunRecord train(const TrainConfig& config, const Dataset& train_data,
                const CostMatrix& cost, std::optional<Index> background);

/// Class probabilities, N x classes.
Eigen::MatrixXd predict_scores(const Model& model, const Dataset& data);

/// Grouped Recall@K for every K in config.eval_k.
std::vector<EvalReport> evaluate(const RunRecord& record, const Dataset& data);

/// Stable identifier of a dataset's contents (FNV-1a over its CSV bytes).
std::string dataset_fingerprint(const Dataset& data);

/// Per-class side-by-side comparison of two evaluated runs.
struct ComparisonRow {
  Index k = 0;
  Index class_index = 0;
  std::string label;
  Index count = 0;
  double recall_a = 0.0;
  double recall_b = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;  // grouped by k, descending count
  struct MeanDelta {
    Index k = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
  };
  std::vector<MeanDelta> means;
};

/// Throws ValidationError when label sets or evaluation datasets differ.
Comparison compare_runs(const RunRecord& a, const RunRecord& b);

/// `k,label,count,recall_a,recall_b,delta` with delta = recall_b - recall_a.
void write_comparison_csv(std::ostream& out, const Comparison& cmp);
/// Human-readable summary with the per-K winner and reference context.
void write_comparison_summary(std::ostream& out, const Comparison& cmp,
                              const RunRecord& a, const RunRecord& b);

}  // namespace otloss

#endif  // OTLOSS_HARNESS_HPP_
