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

#ifndef OTLOSS_METRICS_HPP_
#define OTLOSS_METRICS_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "otloss/ot_core.hpp"

namespace otloss {

struct ScoredInstance {
  Index id = 0;
  Index true_class = 0;
  Eigen::VectorXd scores;
};

/// Candidate predictions from one scene; ranking happens within a group.
struct SceneGroup {
  std::vector<ScoredInstance> instances;
};

struct EvalReport {
  Index k = 0;
  Index n_classes = 0;
  std::optional<Index> background;
  // Classes with ground truth, background excluded.
  std::map<Index, double> per_class_recall;
  std::vector<Index> counts;  // ground-truth totals for every class
  std::vector<Index> hits;
  double mean_recall = 0.0;   // unweighted mean of per_class_recall
  double micro_recall = 0.0;  // pooled hits / pooled counts, same classes

  bool operator==(const EvalReport&) const = default;
};

/// Recall@K per class and its unweighted mean.
///
/// Each instance predicts its argmax class (lowest index on ties). Within a
/// group the k instances with the highest predicted-class score are kept,
/// ties going to the smaller id; a kept instance whose prediction matches
/// its true class is a hit. Per-class recall pools hits over all groups.
EvalReport recall_at_k(const std::vector<SceneGroup>& groups, Index k,
                       std::optional<Index> background = std::nullopt);

/// Splits row-aligned scores and labels into consecutive groups of
/// group_size (the last may be shorter). Instance ids are row indices.
std::vector<SceneGroup> make_groups(const Eigen::MatrixXd& scores,
                                    const std::vector<Index>& labels,
                                    Index group_size);

/// Plain per-class recall of argmax predictions (no top-k cut).
EvalReport per_class_recall(const Eigen::MatrixXd& scores,
                            const std::vector<Index>& labels,
                            std::optional<Index> background = std::nullopt);

/// Unweighted mean recall over a subset of classes; classes without ground
/// truth in the report are skipped. NaN if none remain.
double mean_recall_over(const EvalReport& report,
                        const std::vector<Index>& classes);

/// {"k", "mean_recall", "per_class": {label: recall}, "counts": {label: n}}
///  plus "micro_recall", "hits" and "n_classes" for a lossless reload.
nlohmann::json report_to_json(const EvalReport& report,
                              const std::vector<std::string>& labels);
EvalReport report_from_json(const nlohmann::json& json,
                            const std::vector<std::string>& labels);

/// `label,count,recall` rows in descending count order (ties by class).
void write_report_csv(std::ostream& out, const EvalReport& report,
                      const std::vector<std::string>& labels);

/// Class indices ordered by descending count, ties by ascending index.
std::vector<Index> classes_by_frequency(const std::vector<Index>& counts);

}  // namespace otloss

#endif  // OTLOSS_METRICS_HPP_
