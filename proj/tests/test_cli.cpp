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

#include "cli_pipeline.hpp"

using namespace otloss::cli_test;

namespace {

const fs::path kScratch = fs::path(OTLOSS_TEST_SCRATCH) / "cli";

}  // namespace

TEST_CASE("every subcommand runs and reruns byte-identically") {
  std::string failure;
  REQUIRE_MESSAGE(run_pipeline(OTLOSS_CLI, kScratch / "first", &failure), failure);
  REQUIRE_MESSAGE(run_pipeline(OTLOSS_CLI, kScratch / "second", &failure), failure);
  const auto first = snapshot(kScratch / "first");
  const auto second = snapshot(kScratch / "second");
  CHECK(first.size() >= 14);
  CHECK(first.count("eval/report_k2.json") == 1);
  CHECK(first.count("cmp/comparison.csv") == 1);
  CHECK(first.count("cmp/summary.txt") == 1);
  for (const auto& [name, bytes] : first) {
    CAPTURE(name);
    REQUIRE(second.count(name) == 1);
    CHECK(second.at(name) == bytes);
  }
}

TEST_CASE("build-cost-matrix reproduces the three-label golden") {
  const fs::path dir = kScratch / "golden";
  fs::create_directories(dir);
  const Outcome o = run(OTLOSS_CLI,
                        "build-cost-matrix --labels " +
                            quoted(fs::path(OTLOSS_TEST_DATA) / "toy3/labels.txt") +
                            " --embeddings " +
                            quoted(fs::path(OTLOSS_TEST_DATA) / "toy3/embeddings.txt") +
                            " --background background --out " +
                            quoted(dir / "cost.csv"),
                        dir);
  REQUIRE(o.exit_code == 0);
  CHECK(slurp(dir / "cost.csv") ==
        slurp(fs::path(OTLOSS_TEST_DATA) / "toy3/cost_expected.csv"));
}

TEST_CASE("exit codes") {
  const fs::path dir = kScratch / "errors";
  fs::create_directories(dir);
  spit(dir / "labels.txt", "background\nlying on\n");
  spit(dir / "emb.txt", "on\t1 0\n");
  spit(dir / "bad.cfg", "loss = ce\nlearning_rat = 0.1\n");
  spit(dir / "empty.csv", "");

  SUBCASE("missing token names the token") {
    const Outcome o = run(OTLOSS_CLI,
                          "build-cost-matrix --labels " + quoted(dir / "labels.txt") +
                              " --embeddings " + quoted(dir / "emb.txt") +
                              " --background background --out " +
                              quoted(dir / "c.csv"),
                          dir);
    CHECK(o.exit_code == 1);
    CHECK(o.output.find("lying") != std::string::npos);
  }
  SUBCASE("missing input file is an I/O error") {
    const Outcome o = run(OTLOSS_CLI,
                          "build-cost-matrix --labels " + quoted(dir / "nope.txt") +
                              " --embeddings " + quoted(dir / "emb.txt") +
                              " --out " + quoted(dir / "c.csv"),
                          dir);
    CHECK(o.exit_code == 2);
  }
  SUBCASE("unknown config key is a validation error") {
    const Outcome o = run(OTLOSS_CLI,
                          "train --config " + quoted(dir / "bad.cfg") + " --synth " +
                              quoted(dir / "bad.cfg") + " --out " + quoted(dir / "r.json"),
                          dir);
    CHECK(o.exit_code == 1);
    CHECK(o.output.find("learning_rat") != std::string::npos);
  }
  SUBCASE("bad flags are validation errors") {
    CHECK(run(OTLOSS_CLI, "train --bogus", dir).exit_code == 1);
    CHECK(run(OTLOSS_CLI, "no-such-command", dir).exit_code == 1);
  }
  SUBCASE("unwritable output is an I/O error") {
    const Outcome o = run(OTLOSS_CLI,
                          "build-cost-matrix --labels " +
                              quoted(fs::path(OTLOSS_TEST_DATA) / "toy3/labels.txt") +
                              " --embeddings " +
                              quoted(fs::path(OTLOSS_TEST_DATA) / "toy3/embeddings.txt") +
                              " --background background --out " +
                              quoted(dir / "emb.txt" / "c.csv"),
                          dir);
    CHECK(o.exit_code == 2);
  }
}
