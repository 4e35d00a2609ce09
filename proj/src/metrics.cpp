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

#include "otloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "otloss/error.hpp"
#include "text_io.hpp"

namespace otloss {

namespace {

std::string label_of(const std::vector<std::string>& labels, Index c) {
  return labels.empty() ? std::to_string(c) : labels[static_cast<std::size_t>(c)];
}

void check_labels(const std::vector<std::string>& labels, Index n_classes) {
  if (!labels.empty() && static_cast<Index>(labels.size()) != n_classes) {
    throw ValidationError("label list has " + std::to_string(labels.size()) +
                          " names for " + std::to_string(n_classes) +
                          " classes");
  }
}

void finish(EvalReport& r) {
  r.per_class_recall.clear();
  double sum = 0.0;
  Index pooled_hits = 0;
  Index pooled_counts = 0;
  for (Index c = 0; c < r.n_classes; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (c == r.background || r.counts[i] == 0) continue;
    const double recall =
        static_cast<double>(r.hits[i]) / static_cast<double>(r.counts[i]);
    r.per_class_recall.emplace(c, recall);
    sum += recall;
    pooled_hits += r.hits[i];
    pooled_counts += r.counts[i];
  }
  const auto included = static_cast<double>(r.per_class_recall.size());
  r.mean_recall = included > 0 ? sum / included : 0.0;
  r.micro_recall = pooled_counts > 0 ? static_cast<double>(pooled_hits) /
                                           static_cast<double>(pooled_counts)
                                     : 0.0;
}

}  // namespace

EvalReport recall_at_k(const std::vector<SceneGroup>& groups, Index k,
                       std::optional<Index> background) {
  if (k < 1) throw ValidationError("k must be >= 1");
  EvalReport r;
  r.k = k;
  r.background = background;
  r.n_classes = -1;
  struct Candidate {
    Index id;
    Index predicted;
    double score;
    Index truth;
  };
  std::vector<Candidate> candidates;
  for (const SceneGroup& group : groups) {
    candidates.clear();
    for (const ScoredInstance& inst : group.instances) {
      if (r.n_classes < 0) {
        r.n_classes = inst.scores.size();
        if (r.n_classes < 1) throw ValidationError("empty score vector");
        r.counts.assign(static_cast<std::size_t>(r.n_classes), 0);
        r.hits.assign(static_cast<std::size_t>(r.n_classes), 0);
      } else if (inst.scores.size() != r.n_classes) {
        throw ValidationError("inconsistent score-vector widths");
      }
      if (inst.true_class < 0 || inst.true_class >= r.n_classes) {
        throw ValidationError("true class " + std::to_string(inst.true_class) +
                              " out of range");
      }
      Index predicted = 0;
      for (Index c = 1; c < r.n_classes; ++c) {
        if (inst.scores[c] > inst.scores[predicted]) predicted = c;
      }
      candidates.push_back(
          {inst.id, predicted, inst.scores[predicted], inst.true_class});
      ++r.counts[static_cast<std::size_t>(inst.true_class)];
    }
    const auto keep = std::min<std::size_t>(candidates.size(),
                                            static_cast<std::size_t>(k));
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(),
                      [](const Candidate& x, const Candidate& y) {
                        if (x.score != y.score) return x.score > y.score;
                        return x.id < y.id;
                      });
    for (std::size_t i = 0; i < keep; ++i) {
      if (candidates[i].predicted == candidates[i].truth) {
        ++r.hits[static_cast<std::size_t>(candidates[i].truth)];
      }
    }
  }
  if (r.n_classes < 0) throw ValidationError("no instances to evaluate");
  if (background && (*background < 0 || *background >= r.n_classes)) {
    throw ValidationError("background index out of range");
  }
  finish(r);
  return r;
}

std::vector<SceneGroup> make_groups(const Eigen::MatrixXd& scores,
                                    const std::vector<Index>& labels,
                                    Index group_size) {
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  if (static_cast<Index>(labels.size()) != scores.rows()) {
    throw ValidationError("scores and labels have different lengths");
  }
  std::vector<SceneGroup> groups;
  for (Index start = 0; start < scores.rows(); start += group_size) {
    SceneGroup g;
    const Index end = std::min(scores.rows(), start + group_size);
    for (Index row = start; row < end; ++row) {
      g.instances.push_back(
          {row, labels[static_cast<std::size_t>(row)], scores.row(row).transpose()});
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

EvalReport per_class_recall(const Eigen::MatrixXd& scores,
                            const std::vector<Index>& labels,
                            std::optional<Index> background) {
  const Index n = std::max<Index>(scores.rows(), 1);
  EvalReport r = recall_at_k(make_groups(scores, labels, n), n, background);
  return r;
}

double mean_recall_over(const EvalReport& report,
                        const std::vector<Index>& classes) {
  double sum = 0.0;
  int used = 0;
  for (Index c : classes) {
    const auto it = report.per_class_recall.find(c);
    if (it == report.per_class_recall.end()) continue;
    sum += it->second;
    ++used;
  }
  return used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json report_to_json(const EvalReport& report,
                              const std::vector<std::string>& labels) {
  check_labels(labels, report.n_classes);
  nlohmann::json j;
  j["k"] = report.k;
  j["n_classes"] = report.n_classes;
  j["background"] = report.background
                        ? nlohmann::json(label_of(labels, *report.background))
                        : nlohmann::json(nullptr);
  j["mean_recall"] = report.mean_recall;
  j["micro_recall"] = report.micro_recall;
  j["per_class"] = nlohmann::json::object();
  for (const auto& [c, recall] : report.per_class_recall) {
    j["per_class"][label_of(labels, c)] = recall;
  }
  j["counts"] = nlohmann::json::object();
  j["hits"] = nlohmann::json::object();
  for (Index c = 0; c < report.n_classes; ++c) {
    j["counts"][label_of(labels, c)] = report.counts[static_cast<std::size_t>(c)];
    j["hits"][label_of(labels, c)] = report.hits[static_cast<std::size_t>(c)];
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& j,
                            const std::vector<std::string>& labels) {
  try {
    EvalReport r;
    r.k = j.at("k").get<Index>();
    r.n_classes = j.at("n_classes").get<Index>();
    check_labels(labels, r.n_classes);
    r.counts.assign(static_cast<std::size_t>(r.n_classes), 0);
    r.hits.assign(static_cast<std::size_t>(r.n_classes), 0);
    for (Index c = 0; c < r.n_classes; ++c) {
      const std::string name = label_of(labels, c);
      r.counts[static_cast<std::size_t>(c)] = j.at("counts").at(name).get<Index>();
      r.hits[static_cast<std::size_t>(c)] = j.at("hits").at(name).get<Index>();
      if (!j.at("background").is_null() &&
          j.at("background").get<std::string>() == name) {
        r.background = c;
      }
    }
    finish(r);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::vector<Index> classes_by_frequency(const std::vector<Index>& counts) {
  std::vector<Index> order(counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return counts[static_cast<std::size_t>(x)] > counts[static_cast<std::size_t>(y)];
  });
  return order;
}

void write_report_csv(std::ostream& out, const EvalReport& report,
                      const std::vector<std::string>& labels) {
  check_labels(labels, report.n_classes);
  out << "label,count,recall\n";
  for (Index c : classes_by_frequency(report.counts)) {
    const auto it = report.per_class_recall.find(c);
    if (it == report.per_class_recall.end()) continue;
    out << text::csv_field(label_of(labels, c)) << ','
        << report.counts[static_cast<std::size_t>(c)] << ','
        << text::format_double(it->second) << '\n';
  }
}

}  // namespace otloss
