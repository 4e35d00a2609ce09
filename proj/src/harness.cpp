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

#include "otloss/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "otloss/error.hpp"
#include "text_io.hpp"

namespace otloss {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double as_double(const std::string& key, const std::string& value) {
  const auto v = text::parse_double(value);
  if (!v || !std::isfinite(*v)) {
    throw ValidationError("config key '" + key + "': expected a number, got '" +
                          value + "'");
  }
  return *v;
}

long long as_int(const std::string& key, const std::string& value) {
  const auto v = text::parse_int(trim(value));
  if (!v) {
    throw ValidationError("config key '" + key +
                          "': expected an integer, got '" + value + "'");
  }
  return *v;
}

std::uint64_t as_seed(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), seed);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ValidationError("config key '" + key +
                          "': expected an unsigned 64-bit seed, got '" + value +
                          "'");
  }
  return seed;
}

LossKind loss_from_string(const std::string& s) {
  if (s == "ce") return LossKind::kCrossEntropy;
  if (s == "ot-sum") return LossKind::kOtSum;
  if (s == "ot-mean") return LossKind::kOtMean;
  throw ValidationError("unknown loss '" + s + "' (expected ce, ot-sum, ot-mean)");
}

ModelKind model_from_string(const std::string& s) {
  if (s == "linear") return ModelKind::kLinear;
  if (s == "mlp") return ModelKind::kMlp;
  throw ValidationError("unknown model '" + s + "' (expected linear, mlp)");
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Index cols) {
  Eigen::MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) {
      throw ValidationError("ragged matrix in run record");
    }
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Index>(values.size()));
}

Eigen::MatrixXd gaussian(Index rows, Index cols, double scale,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < cols; ++k) m(i, k) = scale * normal(rng);
  }
  return m;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["loss"] = to_string(c.loss);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["model"] = to_string(c.model);
  j["hidden_width"] = c.hidden_width;
  j["sinkhorn_epsilon"] = c.sinkhorn.epsilon;
  j["sinkhorn_iterations"] = c.sinkhorn.fixed_iteration_count;
  j["seed"] = c.seed;
  j["eval_group_size"] = c.eval_group_size;
  j["eval_k"] = c.eval_k;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.loss = loss_from_string(j.at("loss").get<std::string>());
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<Index>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.model = model_from_string(j.at("model").get<std::string>());
  c.hidden_width = j.at("hidden_width").get<Index>();
  c.sinkhorn.epsilon = j.at("sinkhorn_epsilon").get<double>();
  c.sinkhorn.fixed_iteration_count = j.at("sinkhorn_iterations").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_group_size = j.at("eval_group_size").get<Index>();
  c.eval_k = j.at("eval_k").get<std::vector<Index>>();
  c.validate();
  return c;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return "ce";
    case LossKind::kOtSum:
      return "ot-sum";
    case LossKind::kOtMean:
      return "ot-mean";
  }
  return "?";
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "mlp";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (model == ModelKind::kMlp && hidden_width < 1) {
    throw ValidationError("hidden_width must be >= 1");
  }
  if (sinkhorn.mode != SinkhornMode::kFixedIterations) {
    throw ValidationError("training needs fixed-iterations sinkhorn");
  }
  sinkhorn.validate();
  if (eval_group_size < 1) throw ValidationError("eval_group_size must be >= 1");
  if (eval_k.empty()) throw ValidationError("eval_k must list at least one K");
  for (Index k : eval_k) {
    if (k < 1) throw ValidationError("eval_k values must be >= 1");
  }
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

TrainConfig parse_train_config(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "loss") {
      c.loss = loss_from_string(value);
    } else if (key == "epochs") {
      c.epochs = static_cast<int>(as_int(key, value));
    } else if (key == "batch_size") {
      c.batch_size = as_int(key, value);
    } else if (key == "learning_rate") {
      c.learning_rate = as_double(key, value);
    } else if (key == "model") {
      c.model = model_from_string(value);
    } else if (key == "hidden_width") {
      c.hidden_width = as_int(key, value);
    } else if (key == "sinkhorn_epsilon") {
      c.sinkhorn.epsilon = as_double(key, value);
    } else if (key == "sinkhorn_iterations") {
      c.sinkhorn.fixed_iteration_count = static_cast<int>(as_int(key, value));
    } else if (key == "seed") {
      c.seed = as_seed(key, value);
    } else if (key == "eval_group_size") {
      c.eval_group_size = as_int(key, value);
    } else if (key == "eval_k") {
      c.eval_k.clear();
      std::stringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) c.eval_k.push_back(as_int(key, item));
    } else {
      throw ValidationError("unknown train config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SynthConfig parse_synth_config(const std::map<std::string, std::string>& kv) {
  SynthConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "n_classes") {
      c.n_classes = as_int(key, value);
    } else if (key == "feature_dim") {
      c.feature_dim = as_int(key, value);
    } else if (key == "zipf_exponent") {
      c.zipf_exponent = as_double(key, value);
    } else if (key == "train_samples") {
      c.train_samples = as_int(key, value);
    } else if (key == "test_samples") {
      c.test_samples = as_int(key, value);
    } else if (key == "class_spread") {
      c.class_spread = as_double(key, value);
    } else if (key == "centroid_radius") {
      c.centroid_radius = as_double(key, value);
    } else if (key == "noise_scale") {
      c.noise_scale = as_double(key, value);
    } else if (key == "similarity_groups") {
      c.similarity_groups = as_int(key, value);
    } else if (key == "seed") {
      c.seed = as_seed(key, value);
    } else {
      throw ValidationError("unknown synth config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

Model::Model(ModelKind kind, Index inputs, Index hidden, Index classes,
             std::mt19937_64& rng)
    : kind_(kind), inputs_(inputs), classes_(classes) {
  if (kind == ModelKind::kLinear) {
    weights_ = Eigen::MatrixXd::Zero(classes, inputs);
  } else {
    hidden_weights_ = gaussian(hidden, inputs, 1.0 / std::sqrt(double(inputs)), rng);
    hidden_bias_ = Eigen::VectorXd::Zero(hidden);
    weights_ = gaussian(classes, hidden, 1.0 / std::sqrt(double(hidden)), rng);
  }
  bias_ = Eigen::VectorXd::Zero(classes);
}

Eigen::MatrixXd Model::logits(const Eigen::MatrixXd& features) const {
  if (features.cols() != inputs_) {
    throw ValidationError("model expects " + std::to_string(inputs_) +
                          " features, got " + std::to_string(features.cols()));
  }
  if (kind_ == ModelKind::kLinear) {
    return (features * weights_.transpose()).rowwise() + bias_.transpose();
  }
  const Eigen::MatrixXd hidden =
      ((features * hidden_weights_.transpose()).rowwise() +
       hidden_bias_.transpose())
          .array()
          .tanh()
          .matrix();
  return (hidden * weights_.transpose()).rowwise() + bias_.transpose();
}

void Model::step(const Eigen::MatrixXd& features,
                 const Eigen::MatrixXd& logit_grad, double learning_rate) {
  if (kind_ == ModelKind::kLinear) {
    weights_ -= learning_rate * (logit_grad.transpose() * features);
    bias_ -= learning_rate * logit_grad.colwise().sum().transpose();
    return;
  }
  const Eigen::MatrixXd hidden =
      ((features * hidden_weights_.transpose()).rowwise() +
       hidden_bias_.transpose())
          .array()
          .tanh()
          .matrix();
  const Eigen::MatrixXd hidden_grad =
      ((logit_grad * weights_).array() * (1.0 - hidden.array().square()))
          .matrix();
  weights_ -= learning_rate * (logit_grad.transpose() * hidden);
  bias_ -= learning_rate * logit_grad.colwise().sum().transpose();
  hidden_weights_ -= learning_rate * (hidden_grad.transpose() * features);
  hidden_bias_ -= learning_rate * hidden_grad.colwise().sum().transpose();
}

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["inputs"] = inputs_;
  j["classes"] = classes_;
  j["weights"] = matrix_to_json(weights_);
  j["bias"] = vector_to_json(bias_);
  if (kind_ == ModelKind::kMlp) {
    j["hidden_weights"] = matrix_to_json(hidden_weights_);
    j["hidden_bias"] = vector_to_json(hidden_bias_);
  }
  return j;
}

Model Model::from_json(const nlohmann::json& j) {
  Model m;
  m.kind_ = model_from_string(j.at("kind").get<std::string>());
  m.inputs_ = j.at("inputs").get<Index>();
  m.classes_ = j.at("classes").get<Index>();
  Index width = m.inputs_;
  if (m.kind_ == ModelKind::kMlp) {
    m.hidden_weights_ = matrix_from_json(j.at("hidden_weights"), m.inputs_);
    m.hidden_bias_ = vector_from_json(j.at("hidden_bias"));
    width = m.hidden_weights_.rows();
    if (m.hidden_bias_.size() != width) {
      throw ValidationError("hidden bias size mismatch in run record");
    }
  }
  m.weights_ = matrix_from_json(j.at("weights"), width);
  m.bias_ = vector_from_json(j.at("bias"));
  if (m.weights_.rows() != m.classes_ || m.bias_.size() != m.classes_) {
    throw ValidationError("output layer shape mismatch in run record");
  }
  return m;
}

bool Model::operator==(const Model& o) const {
  return kind_ == o.kind_ && inputs_ == o.inputs_ && classes_ == o.classes_ &&
         hidden_weights_ == o.hidden_weights_ &&
         hidden_bias_ == o.hidden_bias_ && weights_ == o.weights_ &&
         bias_ == o.bias_;
}

bool RunRecord::operator==(const RunRecord& o) const {
  return config == o.config && labels == o.labels &&
         background == o.background && model == o.model &&
         epoch_loss == o.epoch_loss && evaluations == o.evaluations &&
         eval_fingerprint == o.eval_fingerprint &&
         wall_clock_seconds == o.wall_clock_seconds;
}

nlohmann::json run_record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["format"] = "otloss-run-record";
  j["version"] = 1;
  j["config"] = config_to_json(r.config);
  j["labels"] = r.labels;
  j["background"] = r.background ? nlohmann::json(*r.background)
                                 : nlohmann::json(nullptr);
  j["model"] = r.model.to_json();
  j["epoch_loss"] = r.epoch_loss;
  j["evaluations"] = nlohmann::json::array();
  for (const EvalReport& e : r.evaluations) {
    j["evaluations"].push_back(report_to_json(e, r.labels));
  }
  j["eval_fingerprint"] = r.eval_fingerprint;
  if (r.wall_clock_seconds) j["wall_clock_seconds"] = *r.wall_clock_seconds;
  return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "otloss-run-record" ||
        j.at("version").get<int>() != 1) {
      throw ValidationError("not an otloss run record (version 1)");
    }
    RunRecord r;
    r.config = config_from_json(j.at("config"));
    r.labels = j.at("labels").get<std::vector<std::string>>();
    if (!j.at("background").is_null()) r.background = j.at("background").get<Index>();
    r.model = Model::from_json(j.at("model"));
    r.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    for (const auto& e : j.at("evaluations")) {
      r.evaluations.push_back(report_from_json(e, r.labels));
    }
    r.eval_fingerprint = j.at("eval_fingerprint").get<std::string>();
    if (j.contains("wall_clock_seconds")) {
      r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run record: ") + e.what());
  }
}

RunRecord train(const TrainConfig& config, const Dataset& train_data,
                const CostMatrix& cost, std::optional<Index> background) {
  config.validate();
  const Index n = cost.rows();
  if (cost.cols() != n) throw ValidationError("cost matrix must be square");
  if (train_data.size() < 1) throw ValidationError("training set is empty");
  for (Index c : train_data.labels) {
    if (c < 0 || c >= n) {
      throw ValidationError("training label " + std::to_string(c) +
                            " outside the cost matrix's " + std::to_string(n) +
                            " classes");
    }
  }
  std::mt19937_64 rng(config.seed);
  RunRecord record;
  record.config = config;
  record.labels = cost.row_labels();
  record.background = background;
  record.model = Model(config.model, train_data.features.cols(),
                       config.hidden_width, n, rng);

  const Index total = train_data.size();
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  Eigen::MatrixXd features;
  std::vector<Index> targets;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (Index start = 0; start < total; start += config.batch_size) {
      const Index count = std::min(config.batch_size, total - start);
      features.resize(count, train_data.features.cols());
      targets.resize(static_cast<std::size_t>(count));
      for (Index r = 0; r < count; ++r) {
        const Index src = order[static_cast<std::size_t>(start + r)];
        features.row(r) = train_data.features.row(src);
        targets[static_cast<std::size_t>(r)] =
            train_data.labels[static_cast<std::size_t>(src)];
      }
      const auto diverged = [&] {
        return NumericalError("non-finite loss at epoch " +
                              std::to_string(epoch + 1) + ", batch " +
                              std::to_string(batches + 1));
      };
      Eigen::MatrixXd logits = record.model.logits(features);
      if (!logits.allFinite()) throw diverged();
      const Batch batch(std::move(logits), targets);
      LossValue loss;
      switch (config.loss) {
        case LossKind::kCrossEntropy:
          loss = ce_loss(batch, Reduction::kMean);
          break;
        case LossKind::kOtSum:
          loss = ot_loss(batch, cost, config.sinkhorn, Reduction::kSum);
          break;
        case LossKind::kOtMean:
          loss = ot_loss(batch, cost, config.sinkhorn, Reduction::kMean);
          break;
      }
      if (!std::isfinite(loss.value) || !loss.gradient.allFinite()) {
        throw diverged();
      }
      record.model.step(features, loss.gradient, config.learning_rate);
      loss_sum += loss.value;
      ++batches;
    }
    record.epoch_loss.push_back(loss_sum / batches);
  }
  return record;
}

Eigen::MatrixXd predict_scores(const Model& model, const Dataset& data) {
  Eigen::MatrixXd logits = model.logits(data.features);
  for (Index i = 0; i < logits.rows(); ++i) {
    logits.row(i) = softmax(logits.row(i).transpose()).transpose();
  }
  return logits;
}

std::vector<EvalReport> evaluate(const RunRecord& record, const Dataset& data) {
  for (Index c : data.labels) {
    if (c < 0 || c >= record.model.classes()) {
      throw ValidationError("evaluation label " + std::to_string(c) +
                            " outside the model's classes");
    }
  }
  const auto groups = make_groups(predict_scores(record.model, data),
                                  data.labels, record.config.eval_group_size);
  std::vector<EvalReport> reports;
  for (Index k : record.config.eval_k) {
    reports.push_back(recall_at_k(groups, k, record.background));
  }
  return reports;
}

std::string dataset_fingerprint(const Dataset& data) {
  std::ostringstream csv;
  write_dataset_csv(csv, data);
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : csv.str()) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Comparison compare_runs(const RunRecord& a, const RunRecord& b) {
  if (a.labels != b.labels || a.background != b.background) {
    throw ValidationError("run records have different label sets");
  }
  if (a.evaluations.empty() || b.evaluations.empty()) {
    throw ValidationError("both run records need stored evaluations");
  }
  if (a.eval_fingerprint != b.eval_fingerprint) {
    throw ValidationError("run records were evaluated on different datasets");
  }
  Comparison cmp;
  for (const EvalReport& ra : a.evaluations) {
    const auto match = std::find_if(
        b.evaluations.begin(), b.evaluations.end(),
        [&](const EvalReport& e) { return e.k == ra.k; });
    if (match == b.evaluations.end()) continue;
    const EvalReport& rb = *match;
    if (ra.counts != rb.counts) {
      throw ValidationError("evaluations disagree on ground-truth counts");
    }
    for (Index c : classes_by_frequency(ra.counts)) {
      const auto ia = ra.per_class_recall.find(c);
      if (ia == ra.per_class_recall.end()) continue;
      ComparisonRow row;
      row.k = ra.k;
      row.class_index = c;
      row.label = a.labels.empty() ? std::to_string(c)
                                   : a.labels[static_cast<std::size_t>(c)];
      row.count = ra.counts[static_cast<std::size_t>(c)];
      row.recall_a = ia->second;
      row.recall_b = rb.per_class_recall.at(c);
      cmp.rows.push_back(std::move(row));
    }
    cmp.means.push_back({ra.k, ra.mean_recall, rb.mean_recall});
  }
  if (cmp.means.empty()) {
    throw ValidationError("run records share no evaluated K");
  }
  return cmp;
}

void write_comparison_csv(std::ostream& out, const Comparison& cmp) {
  out << "k,label,count,recall_a,recall_b,delta\n";
  for (const ComparisonRow& r : cmp.rows) {
    out << r.k << ',' << text::csv_field(r.label) << ',' << r.count << ','
        << text::format_double(r.recall_a) << ','
        << text::format_double(r.recall_b) << ','
        << text::format_double(r.recall_b - r.recall_a) << '\n';
  }
}

void write_comparison_summary(std::ostream& out, const Comparison& cmp,
                              const RunRecord& a, const RunRecord& b) {
  out << "A: " << to_string(a.config.loss) << " (seed " << a.config.seed
      << ")\n";
  out << "B: " << to_string(b.config.loss) << " (seed " << b.config.seed
      << ")\n";
  out << "Published reference, Visual Genome PredCls with a Motif backbone\n"
         "(context only; not reproducible with this harness):\n"
         "  CE      mR@50 = 15.99  mR@100 = 17.30\n"
         "  OT(SUM) mR@50 = 17.55  mR@100 = 20.95\n";
  for (const auto& m : cmp.means) {
    const double delta = m.mean_b - m.mean_a;
    const char* winner = delta > 0.0 ? "B" : (delta < 0.0 ? "A" : "tie");
    out << "mR@" << m.k << ": A = " << fixed6(m.mean_a)
        << "  B = " << fixed6(m.mean_b) << "  delta(B-A) = " << fixed6(delta)
        << "  winner: " << winner << '\n';
  }
}

}  // namespace otloss
