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

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "otloss/cost_matrix.hpp"
#include "otloss/error.hpp"

using namespace otloss;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Random table of single-word tokens w0..w{n-1}.
struct RandomVocabulary {
  LabelEmbeddingTable table;
  std::vector<std::string> words;
};

RandomVocabulary random_vocabulary(Index n, Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  RandomVocabulary vocab{LabelEmbeddingTable(dim), {}};
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXd v(dim);
    for (Index k = 0; k < dim; ++k) v[k] = normal(rng);
    vocab.words.push_back("w" + std::to_string(i));
    vocab.table.add(vocab.words.back(), v);
  }
  return vocab;
}

// Direct formula on the raw (unnormalized) vectors.
double cosine_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return 1.0 - x.dot(y) / (x.norm() * y.norm());
}

}  // namespace

TEST_CASE("normalize_token") {
  CHECK(normalize_token("  Riding\t ON ") == "riding on");
  CHECK(normalize_token("on") == "on");
  CHECK(normalize_token("   ").empty());
}

TEST_CASE("load_embeddings") {
  SUBCASE("two records of dimension 3") {
    std::istringstream in("on\t1 0 0\nriding\t0 1 0.5\n");
    const auto table = load_embeddings(in);
    CHECK(table.size() == 2);
    CHECK(table.dimension() == 3);
    CHECK((*table.find("riding"))[2] == 0.5);
  }
  SUBCASE("blank lines and CRLF are tolerated") {
    std::istringstream in("\nOn\t1 2\r\n\n");
    const auto table = load_embeddings(in);
    CHECK(table.contains("on"));
  }
  SUBCASE("inconsistent dimension names the line") {
    std::istringstream in("on\t1 0 0\nriding\t0 1 0 1\n");
    try {
      load_embeddings(in);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("empty stream") {
    std::istringstream in("");
    CHECK_THROWS_AS(load_embeddings(in), ValidationError);
  }
  SUBCASE("malformed records") {
    for (const char* text : {"on 1 0\n", "on\t1 x\n", "on\t\n", "on\t0 0\n",
                             "on\t1 0\nON\t0 1\n", "on\tnan 1\n"}) {
      std::istringstream in(text);
      CHECK_THROWS_AS(load_embeddings(in), ValidationError);
    }
  }
}

TEST_CASE("label_vector") {
  LabelEmbeddingTable table(2);
  table.add("walking", Eigen::Vector2d(1, 0));
  table.add("on", Eigen::Vector2d(0, 1));
  CHECK(label_vector("on", table) == Eigen::VectorXd(Eigen::Vector2d(0, 1)));
  CHECK(label_vector("walking on", table) ==
        Eigen::VectorXd(Eigen::Vector2d(0.5, 0.5)));
  CHECK(label_vector("Walking  On", table) ==
        Eigen::VectorXd(Eigen::Vector2d(0.5, 0.5)));
  try {
    label_vector("lying on", table);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("'lying'") != std::string::npos);
    CHECK(what.find("'lying on'") != std::string::npos);
  }
}

TEST_CASE("LabelSet validation") {
  CHECK_THROWS_AS(LabelSet({"on", "ON"}), ValidationError);
  CHECK_THROWS_AS(LabelSet({"on", "riding"}, 2), ValidationError);
  CHECK_THROWS_AS(LabelSet({"on", " "}), ValidationError);
  std::istringstream in("background\non\n");
  CHECK_THROWS_AS(read_label_set(in, "__background__"), ValidationError);
}

TEST_CASE("build_cost_matrix: elementary cases") {
  LabelEmbeddingTable table(2);
  table.add("a", Eigen::Vector2d(1, 0));
  table.add("b", Eigen::Vector2d(3, 0));
  table.add("c", Eigen::Vector2d(0, 2));
  table.add("d", Eigen::Vector2d(-1, 0));
  const auto c = build_cost_matrix(LabelSet({"a", "b", "c", "d"}), table);
  CHECK(c(0, 1) == 0.0);
  CHECK(c(0, 2) == 1.0);
  CHECK(c(0, 3) == 2.0);
  CHECK(c.row_labels() == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("build_cost_matrix: three-label golden") {
  std::ifstream labels_in(OTLOSS_TEST_DATA "/toy3/labels.txt");
  std::ifstream table_in(OTLOSS_TEST_DATA "/toy3/embeddings.txt");
  const auto labels = read_label_set(labels_in, "background");
  const auto c = build_cost_matrix(labels, load_embeddings(table_in));
  Eigen::Matrix3d want;
  want << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  CHECK(c.entries() == Eigen::MatrixXd(want));
  std::ostringstream csv;
  write_cost_matrix_csv(csv, c);
  CHECK(csv.str() == read_file(OTLOSS_TEST_DATA "/toy3/cost_expected.csv"));
}

TEST_CASE("build_cost_matrix: invariants on random tables") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + trial;
    auto vocab = random_vocabulary(n - 1, 1 + trial % 7, rng);
    std::vector<std::string> names = vocab.words;
    // A few multi-word labels built from existing tokens.
    names[0] = vocab.words[0] + " " + vocab.words[1];
    const Index bg = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    names.insert(names.begin() + bg, "background");
    const auto c = build_cost_matrix(LabelSet(names, bg), vocab.table);

    double peak = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i == bg || j == bg) continue;
        const double want = i == j ? 0.0
                                   : cosine_distance(label_vector(names[i], vocab.table),
                                                     label_vector(names[j], vocab.table));
        CHECK(c(i, j) == doctest::Approx(want).epsilon(1e-12).scale(1e-12));
        peak = std::max(peak, c(i, j));
      }
    }
    for (Index i = 0; i < n; ++i) {
      CHECK(c(i, i) == 0.0);
      for (Index j = 0; j < n; ++j) {
        CHECK(c(i, j) == c(j, i));
        CHECK(c(i, j) >= 0.0);
        CHECK(c(i, j) <= 2.0);
      }
      if (i != bg) {
        CHECK(c(bg, i) == peak);
        CHECK(c(i, bg) == peak);
      }
    }
  }
}

TEST_CASE("build_cost_matrix: permutation equivariance") {
  std::mt19937_64 rng(77);
  auto vocab = random_vocabulary(9, 5, rng);
  std::vector<std::string> names = vocab.words;
  const auto base = build_cost_matrix(LabelSet(names), vocab.table);
  std::vector<Index> perm(names.size());
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> permuted;
  for (Index p : perm) permuted.push_back(names[static_cast<std::size_t>(p)]);
  const auto c = build_cost_matrix(LabelSet(permuted), vocab.table);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t j = 0; j < perm.size(); ++j) {
      CHECK(c(static_cast<Index>(i), static_cast<Index>(j)) ==
            base(perm[i], perm[j]));
    }
  }
}

TEST_CASE("cost CSV round trip is exact") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd entries = oracle::random_cost(4, 6, 2.0, rng);
  const CostMatrix c(entries, {"a", "b, quoted", "c", "d"},
                     {"p", "q", "r", "s", "t", "u"});
  std::stringstream io;
  write_cost_matrix_csv(io, c);
  const auto back = read_cost_matrix_csv(io);
  CHECK(back.entries() == entries);
  CHECK(back.row_labels() == c.row_labels());
  CHECK(back.col_labels() == c.col_labels());

  std::istringstream bad("label,a\na,x\n");
  CHECK_THROWS_AS(read_cost_matrix_csv(bad), ValidationError);
  std::istringstream ragged("label,a,b\na,1\n");
  CHECK_THROWS_AS(read_cost_matrix_csv(ragged), ValidationError);
}
