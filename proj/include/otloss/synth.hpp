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

#ifndef OTLOSS_SYNTH_HPP_
#define OTLOSS_SYNTH_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "otloss/cost_matrix.hpp"
#include "otloss/ot_core.hpp"

namespace otloss {

/// Parameters of the synthetic long-tailed benchmark. Class 0 is the
/// background class; classes 1..n-1 are split round-robin across
/// similarity_groups so every group mixes frequent and rare classes.
struct SynthConfig {
  Index n_classes = 21;
  Index feature_dim = 16;
  double zipf_exponent = 1.5;
  Index train_samples = 20000;
  Index test_samples = 4000;
  double class_spread = 0.3;     // class mean distance from its group centroid
  double centroid_radius = 3.0;  // group centroid distance from the origin
  double noise_scale = 2.5;      // per-coordinate feature standard deviation
  Index similarity_groups = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Dataset {
  Eigen::MatrixXd features;  // N x feature_dim
  std::vector<Index> labels;
  std::vector<Index> class_frequencies;

  Index size() const { return static_cast<Index>(labels.size()); }
};

struct SynthData {
  Dataset train;
  Dataset test;
  LabelEmbeddingTable embeddings;
  LabelSet labels;
  std::vector<double> priors;  // class prior, proportional to rank^-zipf
};

/// Pure function of the config (including its seed).
SynthData generate(const SynthConfig& config);

/// Zipf class priors over ranks 1..n_classes; class c has rank c + 1.
std::vector<double> zipf_priors(Index n_classes, double exponent);

/// CSV with header `label,f1,...,fd`. n_classes sizes class_frequencies;
/// when absent it is one past the largest label.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in,
                         std::optional<Index> n_classes = std::nullopt);

}  // namespace otloss

#endif  // OTLOSS_SYNTH_HPP_
