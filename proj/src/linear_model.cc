#include "datag/linear_model.h"

#include <algorithm>
#include <exception>
#include <fstream>
#include <map>
#include <set>

#include "datag/errors.h"
#include "json.hpp"

namespace datag {

using Json = nlohmann::ordered_json;

namespace {

constexpr char kFormat[] = "datag-linear-model";
constexpr int kVersion = 1;

std::vector<std::string> ResolveClasses(
    const std::vector<std::string> &labels,
    const std::optional<std::vector<std::string>> &classes) {
  std::vector<std::string> out;
  if (classes) {
    out = *classes;
    std::set<std::string> declared(out.begin(), out.end());
    if (declared.size() != out.size()) throw UsageError("duplicate class names");
    std::map<std::string, size_t> counts;
    for (const auto &l : labels) {
      if (!declared.count(l)) throw UsageError("label '" + l + "' is not a declared class");
      ++counts[l];
    }
    for (const auto &c : out) {
      if (!counts.count(c)) throw TrainingError("class '" + c + "' has no training examples");
    }
  } else {
    std::set<std::string> distinct(labels.begin(), labels.end());
    out.assign(distinct.begin(), distinct.end());
  }
  if (out.size() < 2) throw TrainingError("one-vs-rest training needs at least 2 classes");
  return out;
}

LinearModel TrainOvrImpl(const std::vector<FeatureVector> &xs,
                         const std::vector<std::string> &labels,
                         const WeightLayout &layout, const TrainConfig &cfg,
                         const std::optional<std::vector<std::string>> &classes,
                         bool parallel) {
  cfg.Validate();
  if (xs.size() != labels.size()) throw UsageError("example/label count mismatch");
  LinearModel model;
  model.classes = ResolveClasses(labels, classes);
  model.layout = layout;
  const long k = static_cast<long>(model.classes.size());
  model.weights.resize(k);

  std::vector<std::vector<int>> ys(k, std::vector<int>(labels.size(), -1));
  for (long c = 0; c < k; ++c) {
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == model.classes[c]) ys[c][i] = 1;
    }
  }
  std::vector<const FeatureVector *> ptrs;
  ptrs.reserve(xs.size());
  for (const auto &x : xs) ptrs.push_back(&x);

  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long c = 0; c < k; ++c) {
    try {
      model.weights[c] = TrainBinary(ptrs, ys[c], layout, cfg);
    } catch (...) {
#pragma omp critical(datag_ovr_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return model;
}

}  // namespace

void LinearModel::Validate() const {
  if (classes.empty()) throw ValidationError("model has no classes");
  std::set<std::string> distinct(classes.begin(), classes.end());
  if (distinct.size() != classes.size()) throw ValidationError("model has duplicate classes");
  if (weights.size() != classes.size()) {
    throw ValidationError("model has " + std::to_string(weights.size()) +
                          " weight vectors for " + std::to_string(classes.size()) +
                          " classes");
  }
  if (layout.num_sparse < 0 || layout.dense_dim < 0) {
    throw ValidationError("negative model dimensions");
  }
  for (const auto &w : weights) {
    if (static_cast<int>(w.size()) != layout.size()) {
      throw ValidationError("weight vector length differs from the model layout");
    }
  }
}

void LinearModel::CheckInput(const FeatureVector &x) const {
  if (static_cast<int>(x.dense.size()) != layout.dense_dim) {
    throw DimensionError("input has " + std::to_string(x.dense.size()) +
                         " dense values, model expects " +
                         std::to_string(layout.dense_dim));
  }
}

double LinearModel::Score(const FeatureVector &x, size_t c) const {
  CheckInput(x);
  return Dot(weights[c], x, layout);
}

std::vector<double> LinearModel::Scores(const FeatureVector &x) const {
  CheckInput(x);
  std::vector<double> out(classes.size());
  for (size_t c = 0; c < classes.size(); ++c) out[c] = Dot(weights[c], x, layout);
  return out;
}

Prediction Predict(const LinearModel &model, const FeatureVector &x) {
  Prediction p;
  p.scores = model.Scores(x);
  for (size_t c = 1; c < p.scores.size(); ++c) {
    if (p.scores[c] > p.scores[p.index]) p.index = c;
  }
  p.label = model.classes[p.index];
  return p;
}

std::vector<std::string> PredictBatch(const LinearModel &model,
                                      const std::vector<FeatureVector> &xs) {
  for (const auto &x : xs) model.CheckInput(x);
  std::vector<std::string> out(xs.size());
  const long n = static_cast<long>(xs.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = Predict(model, xs[i]).label;
  return out;
}

LinearModel TrainOvr(const std::vector<FeatureVector> &xs,
                     const std::vector<std::string> &labels,
                     const WeightLayout &layout, const TrainConfig &cfg,
                     std::optional<std::vector<std::string>> classes) {
  return TrainOvrImpl(xs, labels, layout, cfg, classes, true);
}

LinearModel TrainOvrSerial(const std::vector<FeatureVector> &xs,
                           const std::vector<std::string> &labels,
                           const WeightLayout &layout, const TrainConfig &cfg,
                           std::optional<std::vector<std::string>> classes) {
  return TrainOvrImpl(xs, labels, layout, cfg, classes, false);
}

LinearModel TrainDetector(const std::vector<FeatureVector> &xs,
                          const std::vector<bool> &positive,
                          const std::string &name, const WeightLayout &layout,
                          const TrainConfig &cfg) {
  if (xs.size() != positive.size()) throw UsageError("example/label count mismatch");
  std::vector<int> ys(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) ys[i] = positive[i] ? 1 : -1;
  if (std::find(positive.begin(), positive.end(), true) == positive.end()) {
    throw TrainingError("detector '" + name + "' has no positive examples");
  }
  if (std::find(positive.begin(), positive.end(), false) == positive.end()) {
    throw TrainingError("detector '" + name + "' has no negative examples");
  }
  LinearModel model;
  model.classes = {name};
  model.layout = layout;
  model.weights.push_back(TrainBinary(xs, ys, layout, cfg));
  return model;
}

const std::vector<double> &DefaultCGrid() {
  static const std::vector<double> grid = {10, 1, 0.1, 0.01, 0.001};
  return grid;
}

TuneResult TuneC(const std::vector<FeatureVector> &train_x,
                 const std::vector<std::string> &train_y,
                 const std::vector<FeatureVector> &dev_x,
                 const std::vector<std::string> &dev_y,
                 const WeightLayout &layout, const std::vector<double> &grid,
                 const TrainConfig &cfg) {
  if (grid.empty()) throw UsageError("empty C grid");
  if (dev_x.empty() || dev_x.size() != dev_y.size()) {
    throw UsageError("development set is empty or misaligned");
  }
  TuneResult result;
  bool have_best = false;
  double best_acc = -1.0;
  for (double C : grid) {
    TrainConfig c = cfg;
    c.C = C;
    LinearModel m = TrainOvr(train_x, train_y, layout, c);
    std::vector<std::string> pred = PredictBatch(m, dev_x);
    size_t correct = 0;
    for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == dev_y[i];
    double acc = static_cast<double>(correct) / pred.size();
    result.accuracies.emplace_back(C, acc);
    if (!have_best || acc > best_acc || (acc == best_acc && C < result.best_C)) {
      have_best = true;
      best_acc = acc;
      result.best_C = C;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization. Only non-zero weights are stored; the JSON writer emits the
// shortest decimal that round-trips, so reloading is bit-exact.

void LinearModel::Save(std::ostream &out) const {
  Validate();
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["classes"] = classes;
  j["feature_config"] = {{"spec", feature_config.Name()},
                         {"embedding_dim", feature_config.embedding_dim}};
  j["vocab_ref"] = vocab_ref;
  j["num_sparse"] = layout.num_sparse;
  j["dense_dim"] = layout.dense_dim;
  Json ws = Json::array();
  for (const auto &w : weights) {
    Json nz = Json::array();
    for (size_t i = 0; i < w.size(); ++i) {
      if (w[i] != 0.0) nz.push_back(Json::array({i, w[i]}));
    }
    ws.push_back(std::move(nz));
  }
  j["weights"] = std::move(ws);
  out << j.dump() << '\n';
}

void LinearModel::Save(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  Save(out);
  if (!out) throw IoError(path, "write failed");
}

LinearModel LinearModel::Load(std::istream &in, const std::string &name) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception &e) {
    throw ParseError(name, e.what());
  }
  LinearModel m;
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw ParseError(name, "not a linear model file");
    }
    int version = j.at("version").get<int>();
    if (version != kVersion) {
      throw ParseError(name, "unsupported model version " + std::to_string(version));
    }
    m.classes = j.at("classes").get<std::vector<std::string>>();
    const Json &fc = j.at("feature_config");
    m.feature_config = FeatureConfig::Parse(fc.at("spec").get<std::string>());
    m.feature_config.embedding_dim = fc.at("embedding_dim").get<int>();
    m.vocab_ref = j.at("vocab_ref").get<std::string>();
    m.layout.num_sparse = j.at("num_sparse").get<int>();
    m.layout.dense_dim = j.at("dense_dim").get<int>();
    if (m.layout.num_sparse < 0 || m.layout.dense_dim < 0) {
      throw ValidationError(name + ": negative model dimensions");
    }
    for (const auto &nz : j.at("weights")) {
      std::vector<double> w(m.layout.size(), 0.0);
      for (const auto &entry : nz) {
        size_t i = entry.at(0).get<size_t>();
        if (i >= w.size()) throw ValidationError(name + ": weight index out of range");
        w[i] = entry.at(1).get<double>();
      }
      m.weights.push_back(std::move(w));
    }
  } catch (const Json::exception &e) {
    throw ParseError(name, e.what());
  } catch (const UsageError &e) {
    throw ParseError(name, e.what());
  }
  m.Validate();
  return m;
}

LinearModel LinearModel::Load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open model");
  return Load(in, path);
}

}  // namespace datag
