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

#ifndef OTLOSS_COST_MATRIX_HPP_
#define OTLOSS_COST_MATRIX_HPP_

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "otloss/ot_core.hpp"

namespace otloss {

/// Lowercases and collapses runs of whitespace to single spaces, trimming
/// both ends. Applied to labels and embedding tokens before any lookup.
std::string normalize_token(std::string_view text);

/// Word token -> fixed-dimension nonzero vector.
class LabelEmbeddingTable {
 public:
  explicit LabelEmbeddingTable(Index dimension);

  // Throws ValidationError on wrong dimension, zero norm, non-finite
  // components or a duplicate token.
  void add(std::string_view token, Eigen::VectorXd vector);

  Index dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view token) const;
  // nullptr when the token is absent.
  const Eigen::VectorXd* find(std::string_view token) const;
  const std::map<std::string, Eigen::VectorXd, std::less<>>& entries() const {
    return entries_;
  }

 private:
  Index dimension_;
  std::map<std::string, Eigen::VectorXd, std::less<>> entries_;
};

/// Ordered label names plus an optional background ("no relation") label.
class LabelSet {
 public:
  explicit LabelSet(std::vector<std::string> labels,
                    std::optional<Index> background_index = std::nullopt);

  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Index> background_index() const { return background_; }
  Index size() const { return static_cast<Index>(labels_.size()); }

 private:
  std::vector<std::string> labels_;
  std::optional<Index> background_;
};

/// Parses `token<TAB>c1 c2 ... cd` records. The dimension comes from the
/// first record; blank lines are skipped. Errors carry the line number.
LabelEmbeddingTable load_embeddings(std::istream& in);

/// Vector for a (possibly multi-word) label: the arithmetic mean of its
/// token vectors.
Eigen::VectorXd label_vector(std::string_view label,
                             const LabelEmbeddingTable& table);

/// Semantic cost matrix, C_ij = 1 - cos(v_i, v_j) between label vectors.
/// The background label's row and column are then set to the largest
/// non-background entry M, with a zero on its own diagonal.
CostMatrix build_cost_matrix(const LabelSet& labels,
                             const LabelEmbeddingTable& table);

/// One label per line; blank lines are skipped. background_name, when
/// nonempty, must match one of the labels after normalization.
LabelSet read_label_set(std::istream& in, std::string_view background_name);

/// CSV with label names on the first row and column; entries printed with
/// 17 significant digits.
void write_cost_matrix_csv(std::ostream& out, const CostMatrix& cost);
CostMatrix read_cost_matrix_csv(std::istream& in);

}  // namespace otloss

#endif  // OTLOSS_COST_MATRIX_HPP_
