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

// otloss command-line front end.
//
//   otloss gen-data          --config synth.cfg [--seed S] --out DIR
//   otloss build-cost-matrix --labels FILE --embeddings FILE
//                            [--background NAME] --out cost.csv
//   otloss train             --config train.cfg [--seed S] --out record.json
//                            (--data train.csv [--test test.csv] | --synth synth.cfg)
//                            [--cost cost.csv] [--background NAME] [--timing]
//   otloss evaluate          --record record.json --data test.csv
//                            [--k 5,15,30] --out DIR
//   otloss compare           --a record.json --b record.json --out DIR
//
// Exit status: 0 success, 1 validation error, 2 I/O error.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "otloss/cost_matrix.hpp"
#include "otloss/error.hpp"
#include "otloss/harness.hpp"
#include "otloss/metrics.hpp"
#include "otloss/synth.hpp"

namespace fs = std::filesystem;
using namespace otloss;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Re-throws validation errors with the file name prepended.
template <typename Fn>
auto with_file_context(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return parse_key_values(in); });
}

CostMatrix load_cost(const std::string& path) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return read_cost_matrix_csv(in); });
}

Dataset load_dataset(const std::string& path, std::optional<Index> classes) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return read_dataset_csv(in, classes); });
}

RunRecord load_record(const std::string& path) {
  auto in = open_in(path);
  return with_file_context(path, [&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
    return run_record_from_json(j);
  });
}

std::optional<Index> find_label(const std::vector<std::string>& labels,
                                const std::string& name) {
  const std::string key = normalize_token(name);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == key) return static_cast<Index>(i);
  }
  return std::nullopt;
}

std::string to_text(const auto& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

int run_gen_data(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  SynthConfig config = parse_synth_config(read_key_values(config_path));
  if (seed) config.seed = *seed;
  const SynthData data = generate(config);
  const fs::path dir(out_dir);
  write_file(dir / "train.csv",
             to_text([&](std::ostream& o) { write_dataset_csv(o, data.train); }));
  write_file(dir / "test.csv",
             to_text([&](std::ostream& o) { write_dataset_csv(o, data.test); }));
  write_file(dir / "embeddings.txt", to_text([&](std::ostream& o) {
               for (const auto& [token, v] : data.embeddings.entries()) {
                 o << token << '\t';
                 for (Index k = 0; k < v.size(); ++k) {
                   char buf[32];
                   std::snprintf(buf, sizeof(buf), "%.17g", v[k]);
                   o << (k ? " " : "") << buf;
                 }
                 o << '\n';
               }
             }));
  write_file(dir / "labels.txt", to_text([&](std::ostream& o) {
               for (const auto& l : data.labels.labels()) o << l << '\n';
             }));
  return 0;
}

int run_build_cost(const std::string& labels_path, const std::string& emb_path,
                   const std::string& background, const std::string& out) {
  auto label_in = open_in(labels_path);
  const LabelSet labels = with_file_context(
      labels_path, [&] { return read_label_set(label_in, background); });
  auto emb_in = open_in(emb_path);
  const LabelEmbeddingTable table =
      with_file_context(emb_path, [&] { return load_embeddings(emb_in); });
  const CostMatrix cost = build_cost_matrix(labels, table);
  write_file(out, to_text([&](std::ostream& o) { write_cost_matrix_csv(o, cost); }));
  return 0;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string test;
  std::string synth;
  std::string cost;
  std::string background = "background";
  std::string out;
  bool timing = false;
};

int run_train(const TrainArgs& args) {
  TrainConfig config = parse_train_config(read_key_values(args.config));
  if (args.seed) config.seed = *args.seed;

  std::optional<SynthData> synth;
  if (!args.synth.empty()) {
    synth = generate(parse_synth_config(read_key_values(args.synth)));
  }
  const CostMatrix cost =
      !args.cost.empty() ? load_cost(args.cost)
      : synth ? build_cost_matrix(synth->labels, synth->embeddings)
              : throw ValidationError("train needs --cost with --data");
  const Index classes = cost.rows();
  Dataset train_set = synth ? synth->train : load_dataset(args.data, classes);
  std::optional<Dataset> test_set;
  if (synth) {
    test_set = synth->test;
  } else if (!args.test.empty()) {
    test_set = load_dataset(args.test, classes);
  }
  const std::optional<Index> background =
      find_label(cost.row_labels(), args.background);

  const auto start = std::chrono::steady_clock::now();
  RunRecord record = train(config, train_set, cost, background);
  if (test_set) {
    record.evaluations = evaluate(record, *test_set);
    record.eval_fingerprint = dataset_fingerprint(*test_set);
  }
  if (args.timing) {
    record.wall_clock_seconds = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
  }
  write_file(args.out, run_record_to_json(record).dump(2) + "\n");
  return 0;
}

int run_evaluate(const std::string& record_path, const std::string& data_path,
                 const std::string& k_list, const std::string& out_dir) {
  RunRecord record = load_record(record_path);
  if (!k_list.empty()) {
    record.config.eval_k.clear();
    std::stringstream list(k_list);
    std::string item;
    while (std::getline(list, item, ',')) {
      try {
        record.config.eval_k.push_back(std::stoll(item));
      } catch (const std::exception&) {
        throw ValidationError("bad K value '" + item + "'");
      }
    }
    record.config.validate();
  }
  const Dataset data = load_dataset(data_path, record.model.classes());
  const fs::path dir(out_dir);
  for (const EvalReport& report : evaluate(record, data)) {
    const std::string stem = "report_k" + std::to_string(report.k);
    write_file(dir / (stem + ".json"),
               report_to_json(report, record.labels).dump(2) + "\n");
    write_file(dir / (stem + ".csv"), to_text([&](std::ostream& o) {
                 write_report_csv(o, report, record.labels);
               }));
  }
  return 0;
}

int run_compare(const std::string& a_path, const std::string& b_path,
                const std::string& out_dir) {
  const RunRecord a = load_record(a_path);
  const RunRecord b = load_record(b_path);
  const Comparison cmp = compare_runs(a, b);
  const fs::path dir(out_dir);
  write_file(dir / "comparison.csv",
             to_text([&](std::ostream& o) { write_comparison_csv(o, cmp); }));
  const std::string summary = to_text(
      [&](std::ostream& o) { write_comparison_summary(o, cmp, a, b); });
  write_file(dir / "summary.txt", summary);
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport loss toolkit for long-tailed classification"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic long-tailed dataset");
  gen->add_option("--config", config, "synthetic data config")->required();
  gen->add_option("--seed", seed, "override the config seed");
  gen->add_option("--out", out, "output directory")->required();

  std::string labels_path;
  std::string emb_path;
  std::string background;
  auto* cost_cmd = app.add_subcommand("build-cost-matrix",
                                      "semantic cost matrix from label embeddings");
  cost_cmd->add_option("--labels", labels_path, "one label per line")->required();
  cost_cmd->add_option("--embeddings", emb_path, "token<TAB>vector records")->required();
  cost_cmd->add_option("--background", background, "background label name");
  cost_cmd->add_option("--out", out, "output CSV")->required();

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "train a classifier");
  train_cmd->add_option("--config", targs.config, "training config")->required();
  train_cmd->add_option("--seed", targs.seed, "override the config seed");
  auto* data_opt = train_cmd->add_option("--data", targs.data, "training CSV");
  train_cmd->add_option("--test", targs.test, "evaluation CSV")->needs(data_opt);
  auto* synth_opt =
      train_cmd->add_option("--synth", targs.synth, "synthetic data config");
  data_opt->excludes(synth_opt);
  train_cmd->add_option("--cost", targs.cost, "cost-matrix CSV");
  train_cmd->add_option("--background", targs.background,
                        "background label (ignored if absent)");
  train_cmd->add_option("--out", targs.out, "run record JSON")->required();
  train_cmd->add_flag("--timing", targs.timing, "store wall-clock time");

  std::string record_path;
  std::string data_path;
  std::string k_list;
  auto* eval_cmd = app.add_subcommand("evaluate", "Recall@K reports for a run");
  eval_cmd->add_option("--record", record_path, "run record JSON")->required();
  eval_cmd->add_option("--data", data_path, "evaluation CSV")->required();
  eval_cmd->add_option("--k", k_list, "comma-separated K values");
  eval_cmd->add_option("--out", out, "output directory")->required();

  std::string a_path;
  std::string b_path;
  auto* cmp_cmd = app.add_subcommand("compare", "compare two evaluated runs");
  cmp_cmd->add_option("--a", a_path, "run record A")->required();
  cmp_cmd->add_option("--b", b_path, "run record B")->required();
  cmp_cmd->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return run_gen_data(config, seed, out);
    if (cost_cmd->parsed()) {
      return run_build_cost(labels_path, emb_path, background, out);
    }
    if (train_cmd->parsed()) {
      targs.out = targs.out.empty() ? out : targs.out;
      if (targs.data.empty() && targs.synth.empty()) {
        throw ValidationError("train needs --data or --synth");
      }
      return run_train(targs);
    }
    if (eval_cmd->parsed()) return run_evaluate(record_path, data_path, k_list, out);
    if (cmp_cmd->parsed()) return run_compare(a_path, b_path, out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
