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

#include "otloss/synth.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "otloss/error.hpp"
#include "text_io.hpp"

namespace otloss {

namespace {

Eigen::VectorXd random_unit(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (Index i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

std::string two_digits(Index i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

Dataset sample(Index count, const std::vector<double>& priors,
               const std::vector<Eigen::VectorXd>& means, double noise,
               std::mt19937_64& rng) {
  const Index dim = means.front().size();
  std::discrete_distribution<Index> pick(priors.begin(), priors.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.features.resize(count, dim);
  d.labels.resize(static_cast<std::size_t>(count));
  d.class_frequencies.assign(priors.size(), 0);
  for (Index s = 0; s < count; ++s) {
    const Index c = pick(rng);
    d.labels[static_cast<std::size_t>(s)] = c;
    ++d.class_frequencies[static_cast<std::size_t>(c)];
    for (Index k = 0; k < dim; ++k) {
      d.features(s, k) = means[static_cast<std::size_t>(c)][k] + noise * normal(rng);
    }
  }
  return d;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 2) throw ValidationError("n_classes must be >= 2");
  if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
  if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) {
    throw ValidationError("zipf_exponent must be finite and >= 0");
  }
  if (train_samples < n_classes || test_samples < n_classes) {
    throw ValidationError("sample counts must be >= n_classes");
  }
  if (!(class_spread > 0.0) || !(centroid_radius > 0.0) || !(noise_scale > 0.0)) {
    throw ValidationError(
        "class_spread, centroid_radius and noise_scale must be positive");
  }
  if (similarity_groups < 1 || similarity_groups > n_classes - 1) {
    throw ValidationError("similarity_groups must be in [1, n_classes - 1]");
  }
}

std::vector<double> zipf_priors(Index n_classes, double exponent) {
  std::vector<double> p(static_cast<std::size_t>(n_classes));
  double total = 0.0;
  for (Index c = 0; c < n_classes; ++c) {
    p[static_cast<std::size_t>(c)] = std::pow(static_cast<double>(c + 1), -exponent);
    total += p[static_cast<std::size_t>(c)];
  }
  for (double& v : p) v /= total;
  return p;
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const Index n = config.n_classes;
  const Index dim = config.feature_dim;
  const Index groups = config.similarity_groups;

  std::vector<Eigen::VectorXd> centroids;
  for (Index g = 0; g < groups; ++g) {
    centroids.push_back(config.centroid_radius * random_unit(dim, rng));
  }
  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(n));
  means[0] = config.centroid_radius * random_unit(dim, rng);
  for (Index c = 1; c < n; ++c) {
    const auto& centre = centroids[static_cast<std::size_t>((c - 1) % groups)];
    means[static_cast<std::size_t>(c)] =
        centre + config.class_spread * random_unit(dim, rng);
  }

  // Each non-background label is "<class word> <group word>"; the word
  // vectors are chosen so that their average is exactly the class mean.
  LabelEmbeddingTable table(dim);
  std::vector<std::string> names;
  names.push_back("background");
  table.add("background", means[0]);
  for (Index g = 0; g < groups; ++g) {
    table.add("grp" + std::to_string(g), centroids[static_cast<std::size_t>(g)]);
  }
  for (Index c = 1; c < n; ++c) {
    const std::string word = "rel" + two_digits(c);
    const auto& centre = centroids[static_cast<std::size_t>((c - 1) % groups)];
    table.add(word, 2.0 * means[static_cast<std::size_t>(c)] - centre);
    names.push_back(word + " grp" + std::to_string((c - 1) % groups));
  }

  SynthData out{
      sample(config.train_samples, zipf_priors(n, config.zipf_exponent), means,
             config.noise_scale, rng),
      Dataset{},
      std::move(table),
      LabelSet(std::move(names), Index{0}),
      zipf_priors(n, config.zipf_exponent),
  };
  out.test = sample(config.test_samples, out.priors, means, config.noise_scale, rng);
  return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (Index k = 0; k < data.features.cols(); ++k) out << ",f" << (k + 1);
  out << '\n';
  for (Index s = 0; s < data.size(); ++s) {
    out << data.labels[static_cast<std::size_t>(s)];
    for (Index k = 0; k < data.features.cols(); ++k) {
      out << ',' << text::format_double(data.features(s, k));
    }
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, std::optional<Index> n_classes) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset CSV is empty");
  const auto header = text::split_csv(line);
  if (!header || header->size() < 2 || (*header)[0] != "label") {
    throw ValidationError("dataset CSV line 1: expected header label,f1,...");
  }
  const Index dim = static_cast<Index>(header->size()) - 1;
  for (Index k = 1; k <= dim; ++k) {
    if ((*header)[static_cast<std::size_t>(k)] != "f" + std::to_string(k)) {
      throw ValidationError("dataset CSV line 1: column " +
                            std::to_string(k + 1) + " should be f" +
                            std::to_string(k));
    }
  }
  std::vector<Index> labels;
  std::vector<double> values;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = text::split_csv(line);
    const auto where = "dataset CSV line " + std::to_string(line_no) + ": ";
    if (!fields || static_cast<Index>(fields->size()) != dim + 1) {
      throw ValidationError(where + "expected " + std::to_string(dim + 1) +
                            " fields");
    }
    const auto label = text::parse_int((*fields)[0]);
    if (!label || *label < 0 || (n_classes && *label >= *n_classes)) {
      throw ValidationError(where + "bad label '" + (*fields)[0] + "'");
    }
    labels.push_back(static_cast<Index>(*label));
    for (Index k = 1; k <= dim; ++k) {
      const auto v = text::parse_double((*fields)[static_cast<std::size_t>(k)]);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError(where + "bad feature value");
      }
      values.push_back(*v);
    }
  }
  if (labels.empty()) throw ValidationError("dataset CSV has no rows");
  Dataset d;
  d.labels = std::move(labels);
  d.features.resize(d.size(), dim);
  for (Index s = 0; s < d.size(); ++s) {
    for (Index k = 0; k < dim; ++k) {
      d.features(s, k) = values[static_cast<std::size_t>(s * dim + k)];
    }
  }
  Index classes = n_classes.value_or(0);
  for (Index c : d.labels) classes = std::max(classes, c + 1);
  d.class_frequencies.assign(static_cast<std::size_t>(classes), 0);
  for (Index c : d.labels) ++d.class_frequencies[static_cast<std::size_t>(c)];
  return d;
}

}  // namespace otloss
