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

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "otloss/error.hpp"
#include "otloss/harness.hpp"

using namespace otloss;

namespace {

std::map<std::string, std::string> kv_of(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

// Two well separated Gaussian blobs in 2-D.
Dataset separable(Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Dataset d;
  d.features.resize(count, 2);
  d.class_frequencies = {0, 0};
  for (Index s = 0; s < count; ++s) {
    const Index c = s % 2;
    d.labels.push_back(c);
    ++d.class_frequencies[static_cast<std::size_t>(c)];
    d.features(s, 0) = (c == 0 ? -2.0 : 2.0) + noise(rng);
    d.features(s, 1) = noise(rng);
  }
  return d;
}

SynthData small_synth() {
  SynthConfig cfg;
  cfg.n_classes = 6;
  cfg.feature_dim = 4;
  cfg.train_samples = 300;
  cfg.test_samples = 120;
  cfg.similarity_groups = 2;
  return generate(cfg);
}

RunRecord trained(const SynthData& data, LossKind loss, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.epochs = 3;
  cfg.seed = seed;
  cfg.sinkhorn.fixed_iteration_count = 10;
  cfg.eval_k = {1, 5};
  const auto cost = build_cost_matrix(data.labels, data.embeddings);
  RunRecord r = train(cfg, data.train, cost, Index{0});
  r.evaluations = evaluate(r, data.test);
  r.eval_fingerprint = dataset_fingerprint(data.test);
  return r;
}

}  // namespace

TEST_CASE("parse_key_values") {
  const auto kv = kv_of("# comment\nloss = ot-sum\n\n  epochs=4  # trailing\n");
  CHECK(kv.at("loss") == "ot-sum");
  CHECK(kv.at("epochs") == "4");
  CHECK_THROWS_AS(kv_of("a = 1\na = 2\n"), ValidationError);
  CHECK_THROWS_AS(kv_of("no equals sign\n"), ValidationError);
}

TEST_CASE("parse_train_config") {
  const auto cfg = parse_train_config(
      kv_of("loss = ot-mean\nmodel = mlp\nhidden_width = 8\n"
            "sinkhorn_epsilon = 0.5\nsinkhorn_iterations = 20\neval_k = 1, 2\n"));
  CHECK(cfg.loss == LossKind::kOtMean);
  CHECK(cfg.model == ModelKind::kMlp);
  CHECK(cfg.hidden_width == 8);
  CHECK(cfg.sinkhorn.epsilon == 0.5);
  CHECK(cfg.sinkhorn.fixed_iteration_count == 20);
  CHECK(cfg.sinkhorn.mode == SinkhornMode::kFixedIterations);
  CHECK(cfg.eval_k == std::vector<Index>{1, 2});
  CHECK(parse_train_config({}) == TrainConfig{});

  CHECK_THROWS_AS(parse_train_config(kv_of("lr = 0.1\n")), ValidationError);
  CHECK_THROWS_AS(parse_train_config(kv_of("loss = hinge\n")), ValidationError);
  CHECK_THROWS_AS(parse_train_config(kv_of("epochs = 0\n")), ValidationError);
  CHECK_THROWS_AS(parse_train_config(kv_of("epochs = 2.5\n")), ValidationError);
  CHECK_THROWS_AS(parse_train_config(kv_of("learning_rate = -1\n")), ValidationError);
}

TEST_CASE("parse_synth_config") {
  const auto cfg = parse_synth_config(kv_of("n_classes = 11\nzipf_exponent = 0\n"));
  CHECK(cfg.n_classes == 11);
  CHECK(cfg.zipf_exponent == 0.0);
  CHECK_THROWS_AS(parse_synth_config(kv_of("classes = 11\n")), ValidationError);
}

TEST_CASE("train: CE separates two blobs") {
  const Dataset data = separable(400, 3);
  TrainConfig cfg;
  const CostMatrix unused(Eigen::Matrix2d::Zero());
  const RunRecord r = train(cfg, data, unused, std::nullopt);
  const Eigen::MatrixXd p = predict_scores(r.model, data);
  Index correct = 0;
  for (Index s = 0; s < data.size(); ++s) {
    Index best = 0;
    p.row(s).maxCoeff(&best);
    correct += best == data.labels[static_cast<std::size_t>(s)] ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(data.size()) >= 0.99);
  CHECK(r.epoch_loss.size() == 30);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("train: OT-SUM with zero cost leaves the parameters alone") {
  const Dataset data = separable(100, 4);
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kMlp}) {
    TrainConfig cfg;
    cfg.loss = LossKind::kOtSum;
    cfg.model = kind;
    cfg.hidden_width = 5;
    cfg.epochs = 2;
    cfg.seed = 9;
    cfg.sinkhorn.fixed_iteration_count = 5;
    const RunRecord r = train(cfg, data, CostMatrix(Eigen::Matrix2d::Zero()),
                              std::nullopt);
    std::mt19937_64 rng(cfg.seed);
    CHECK(r.model == Model(kind, 2, cfg.hidden_width, 2, rng));
    for (double l : r.epoch_loss) CHECK(l == 0.0);
  }
}

TEST_CASE("train: label outside the cost matrix is rejected") {
  const Dataset data = separable(10, 5);
  CHECK_THROWS_AS(train(TrainConfig{}, data, CostMatrix(Eigen::MatrixXd::Zero(1, 1)),
                        std::nullopt),
                  ValidationError);
}

TEST_CASE("train: non-finite loss names epoch and batch") {
  Dataset data = separable(10, 6);
  data.features(3, 0) = 1e300;
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e10;
  try {
    train(cfg, data, CostMatrix(Eigen::Matrix2d::Zero()), std::nullopt);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch") != std::string::npos);
    CHECK(what.find("batch") != std::string::npos);
  }
}

TEST_CASE("run records: determinism and JSON round trip") {
  const auto data = small_synth();
  const RunRecord a = trained(data, LossKind::kOtSum, 1);
  const RunRecord b = trained(data, LossKind::kOtSum, 1);
  CHECK(a == b);
  CHECK(run_record_to_json(a).dump() == run_record_to_json(b).dump());
  const auto back = run_record_from_json(nlohmann::json::parse(run_record_to_json(a).dump()));
  CHECK(back == a);

  RunRecord timed = a;
  timed.wall_clock_seconds = 1.25;
  CHECK(run_record_from_json(run_record_to_json(timed)) == timed);

  for (LossKind loss : {LossKind::kCrossEntropy, LossKind::kOtMean}) {
    const RunRecord r = trained(data, loss, 2);
    CHECK(run_record_from_json(run_record_to_json(r)) == r);
  }
  auto mlp_cfg = a.config;
  mlp_cfg.model = ModelKind::kMlp;
  mlp_cfg.hidden_width = 3;
  RunRecord mlp = train(mlp_cfg, data.train,
                        build_cost_matrix(data.labels, data.embeddings), Index{0});
  CHECK(run_record_from_json(run_record_to_json(mlp)) == mlp);

  auto broken = run_record_to_json(a);
  broken["format"] = "something-else";
  CHECK_THROWS_AS(run_record_from_json(broken), ValidationError);
}

TEST_CASE("compare_runs") {
  const auto data = small_synth();
  const RunRecord ce = trained(data, LossKind::kCrossEntropy, 1);
  const RunRecord ot = trained(data, LossKind::kOtSum, 1);

  SUBCASE("self comparison has zero deltas") {
    const auto cmp = compare_runs(ce, ce);
    for (const auto& row : cmp.rows) CHECK(row.recall_a == row.recall_b);
    for (const auto& m : cmp.means) CHECK(m.mean_a == m.mean_b);
  }

  SUBCASE("antisymmetry") {
    const auto ab = compare_runs(ce, ot);
    const auto ba = compare_runs(ot, ce);
    REQUIRE(ab.rows.size() == ba.rows.size());
    for (std::size_t i = 0; i < ab.rows.size(); ++i) {
      CHECK(ab.rows[i].label == ba.rows[i].label);
      CHECK(ab.rows[i].recall_b - ab.rows[i].recall_a ==
            -(ba.rows[i].recall_b - ba.rows[i].recall_a));
    }
  }

  SUBCASE("per-class columns average to the reported means") {
    const auto cmp = compare_runs(ce, ot);
    for (const auto& m : cmp.means) {
      double sa = 0.0;
      double sb = 0.0;
      int rows = 0;
      Index previous = std::numeric_limits<Index>::max();
      for (const auto& row : cmp.rows) {
        if (row.k != m.k) continue;
        CHECK(row.count <= previous);
        previous = row.count;
        sa += row.recall_a;
        sb += row.recall_b;
        ++rows;
      }
      REQUIRE(rows > 0);
      CHECK(std::abs(sa / rows - m.mean_a) <= 1e-12);
      CHECK(std::abs(sb / rows - m.mean_b) <= 1e-12);
    }
  }

  SUBCASE("summary states winners and reference context") {
    std::ostringstream out;
    write_comparison_summary(out, compare_runs(ce, ot), ce, ot);
    const std::string text = out.str();
    CHECK(text.find("15.99") != std::string::npos);
    CHECK(text.find("20.95") != std::string::npos);
    CHECK(text.find("mR@5: ") != std::string::npos);
    CHECK(text.find("winner: ") != std::string::npos);
  }

  SUBCASE("mismatched inputs are rejected") {
    RunRecord other = ot;
    other.eval_fingerprint = "0";
    CHECK_THROWS_AS(compare_runs(ce, other), ValidationError);
    other = ot;
    other.labels[1] = "renamed";
    CHECK_THROWS_AS(compare_runs(ce, other), ValidationError);
    other = ot;
    other.evaluations.clear();
    CHECK_THROWS_AS(compare_runs(ce, other), ValidationError);
  }
}
