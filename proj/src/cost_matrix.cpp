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

#include "otloss/cost_matrix.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "otloss/error.hpp"
#include "text_io.hpp"

namespace otloss {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

std::string normalize_token(std::string_view text) {
  std::string out;
  for (const std::string& word : split_words(text)) {
    if (!out.empty()) out += ' ';
    for (char ch : word) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  return out;
}

LabelEmbeddingTable::LabelEmbeddingTable(Index dimension)
    : dimension_(dimension) {
  if (dimension < 1) {
    throw ValidationError("embedding dimension must be >= 1");
  }
}

void LabelEmbeddingTable::add(std::string_view token, Eigen::VectorXd vector) {
  const std::string key = normalize_token(token);
  if (key.empty()) throw ValidationError("empty embedding token");
  if (vector.size() != dimension_) {
    std::ostringstream msg;
    msg << "inconsistent dimension for token '" << key << "': got "
        << vector.size() << ", expected " << dimension_;
    throw ValidationError(msg.str());
  }
  if (!vector.allFinite()) {
    throw ValidationError("non-finite component in vector for token '" + key +
                          "'");
  }
  if (vector.norm() == 0.0) {
    throw ValidationError("zero-norm vector for token '" + key + "'");
  }
  if (!entries_.emplace(key, std::move(vector)).second) {
    throw ValidationError("duplicate token '" + key + "'");
  }
}

bool LabelEmbeddingTable::contains(std::string_view token) const {
  return entries_.find(token) != entries_.end();
}

const Eigen::VectorXd* LabelEmbeddingTable::find(std::string_view token) const {
  const auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

LabelSet::LabelSet(std::vector<std::string> labels,
                   std::optional<Index> background_index)
    : background_(background_index) {
  labels_.reserve(labels.size());
  std::set<std::string> seen;
  for (const std::string& raw : labels) {
    std::string label = normalize_token(raw);
    if (label.empty()) throw ValidationError("empty label name");
    if (!seen.insert(label).second) {
      throw ValidationError("duplicate label '" + label + "'");
    }
    labels_.push_back(std::move(label));
  }
  if (background_ && (*background_ < 0 || *background_ >= size())) {
    throw ValidationError("background index out of range");
  }
}

LabelEmbeddingTable load_embeddings(std::istream& in) {
  std::optional<LabelEmbeddingTable> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto at = [&](const std::string& what) {
      return ValidationError("embeddings line " + std::to_string(line_no) +
                             ": " + what);
    };
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw at("expected token<TAB>values");
    const std::string token = line.substr(0, tab);
    std::vector<double> values;
    for (const std::string& field : split_words(line.substr(tab + 1))) {
      const auto v = text::parse_double(field);
      if (!v) throw at("bad number '" + field + "'");
      values.push_back(*v);
    }
    if (values.empty()) throw at("record has no vector components");
    if (!table) table.emplace(static_cast<Index>(values.size()));
    try {
      table->add(token, Eigen::Map<const Eigen::VectorXd>(
                            values.data(), static_cast<Index>(values.size())));
    } catch (const ValidationError& e) {
      throw at(e.what());
    }
  }
  if (!table) {
    throw ValidationError("embedding stream is empty; no dimension to infer");
  }
  return std::move(*table);
}

Eigen::VectorXd label_vector(std::string_view label,
                             const LabelEmbeddingTable& table) {
  const std::string name = normalize_token(label);
  const std::vector<std::string> words = split_words(name);
  if (words.empty()) throw ValidationError("empty label");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dimension());
  for (const std::string& w : words) {
    const Eigen::VectorXd* v = table.find(w);
    if (v == nullptr) {
      throw ValidationError("token '" + w + "' of label '" + name +
                            "' is missing from the embedding table");
    }
    sum += *v;
  }
  return sum / static_cast<double>(words.size());
}

CostMatrix build_cost_matrix(const LabelSet& labels,
                             const LabelEmbeddingTable& table) {
  const Index n = labels.size();
  const std::optional<Index> bg = labels.background_index();
  std::vector<Eigen::VectorXd> unit(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (i == bg) continue;
    const Eigen::VectorXd v = label_vector(labels.labels()[i], table);
    const double norm = v.norm();
    if (norm == 0.0) {
      throw ValidationError("label '" + labels.labels()[i] +
                            "' averages to a zero vector");
    }
    unit[i] = v / norm;
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  double peak = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (i == bg) continue;
    for (Index j = i + 1; j < n; ++j) {
      if (j == bg) continue;
      // Clamp rounding just outside [-1, 1].
      const double cosine = std::clamp(unit[i].dot(unit[j]), -1.0, 1.0);
      const double d = 1.0 - cosine;
      c(i, j) = d;
      c(j, i) = d;
      peak = std::max(peak, d);
    }
  }
  if (bg) {
    c.row(*bg).setConstant(peak);
    c.col(*bg).setConstant(peak);
    c(*bg, *bg) = 0.0;
  }
  return CostMatrix(std::move(c), labels.labels(), labels.labels());
}

LabelSet read_label_set(std::istream& in, std::string_view background_name) {
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::string label = normalize_token(line);
    if (!label.empty()) labels.push_back(std::move(label));
  }
  if (labels.empty()) throw ValidationError("label file has no labels");
  std::optional<Index> bg;
  const std::string bg_name = normalize_token(background_name);
  if (!bg_name.empty()) {
    const auto it = std::find(labels.begin(), labels.end(), bg_name);
    if (it == labels.end()) {
      throw ValidationError("background label '" + bg_name +
                            "' is not in the label file");
    }
    bg = static_cast<Index>(it - labels.begin());
  }
  return LabelSet(std::move(labels), bg);
}

void write_cost_matrix_csv(std::ostream& out, const CostMatrix& cost) {
  const auto label = [](const std::vector<std::string>& names, Index i) {
    return names.empty() ? std::to_string(i)
                         : names[static_cast<std::size_t>(i)];
  };
  out << "label";
  for (Index j = 0; j < cost.cols(); ++j) {
    out << ',' << text::csv_field(label(cost.col_labels(), j));
  }
  out << '\n';
  for (Index i = 0; i < cost.rows(); ++i) {
    out << text::csv_field(label(cost.row_labels(), i));
    for (Index j = 0; j < cost.cols(); ++j) {
      out << ',' << text::format_double(cost(i, j));
    }
    out << '\n';
  }
}

CostMatrix read_cost_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("cost CSV is empty");
  auto header = text::split_csv(line);
  if (!header || header->size() < 2) {
    throw ValidationError("cost CSV line 1: malformed header");
  }
  std::vector<std::string> cols(header->begin() + 1, header->end());
  std::vector<std::string> rows;
  std::vector<double> values;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = text::split_csv(line);
    if (!fields || fields->size() != cols.size() + 1) {
      throw ValidationError("cost CSV line " + std::to_string(line_no) +
                            ": expected " + std::to_string(cols.size() + 1) +
                            " fields");
    }
    rows.push_back((*fields)[0]);
    for (std::size_t j = 1; j < fields->size(); ++j) {
      const auto v = text::parse_double((*fields)[j]);
      if (!v) {
        throw ValidationError("cost CSV line " + std::to_string(line_no) +
                              ": bad number '" + (*fields)[j] + "'");
      }
      values.push_back(*v);
    }
  }
  const Index n = static_cast<Index>(rows.size());
  const Index m = static_cast<Index>(cols.size());
  Eigen::MatrixXd c(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      c(i, j) = values[static_cast<std::size_t>(i * m + j)];
    }
  }
  return CostMatrix(std::move(c), std::move(rows), std::move(cols));
}

}  // namespace otloss
