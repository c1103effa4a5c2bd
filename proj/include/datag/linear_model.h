#ifndef DATAG_LINEAR_MODEL_H_
#define DATAG_LINEAR_MODEL_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "datag/features.h"
#include "datag/svm.h"

namespace datag {

// One weight vector per class. A model with a single class is a binary
// detector: Score(x, 0) > 0 means the class fires.
struct LinearModel {
  std::vector<std::string> classes;
  std::vector<std::vector<double>> weights;
  WeightLayout layout;
  FeatureConfig feature_config;
  std::string vocab_ref;

  bool binary() const { return classes.size() == 1; }

  // Throws ValidationError on empty/duplicate classes or ragged weights.
  void Validate() const;
  // Throws DimensionError when x's dense block does not match the model.
  void CheckInput(const FeatureVector &x) const;
  double Score(const FeatureVector &x, size_t c) const;
  std::vector<double> Scores(const FeatureVector &x) const;

  void Save(std::ostream &out) const;
  void Save(const std::string &path) const;
  static LinearModel Load(std::istream &in, const std::string &name);
  static LinearModel Load(const std::string &path);

  bool operator==(const LinearModel &) const = default;
};

struct Prediction {
  std::string label;
  size_t index = 0;
  std::vector<double> scores;
};

// Argmax over class scores; ties go to the earliest class.
Prediction Predict(const LinearModel &model, const FeatureVector &x);
std::vector<std::string> PredictBatch(const LinearModel &model,
                                      const std::vector<FeatureVector> &xs);

// One-vs-rest training, parallel over classes. Classes default to the sorted
// distinct labels; when given explicitly each must have ≥1 example
// (TrainingError naming the class otherwise) and labels outside the set are a
// UsageError.
LinearModel TrainOvr(const std::vector<FeatureVector> &xs,
                     const std::vector<std::string> &labels,
                     const WeightLayout &layout, const TrainConfig &cfg,
                     std::optional<std::vector<std::string>> classes = std::nullopt);
// Serial reference; produces bit-identical weights.
LinearModel TrainOvrSerial(
    const std::vector<FeatureVector> &xs, const std::vector<std::string> &labels,
    const WeightLayout &layout, const TrainConfig &cfg,
    std::optional<std::vector<std::string>> classes = std::nullopt);

// Binary detector for `positive`: examples with positive[i] are +1.
LinearModel TrainDetector(const std::vector<FeatureVector> &xs,
                          const std::vector<bool> &positive,
                          const std::string &name, const WeightLayout &layout,
                          const TrainConfig &cfg);

struct TuneResult {
  double best_C = 0.0;
  std::vector<std::pair<double, double>> accuracies;  // (C, dev accuracy)
};

// Trains on `train` per grid value and scores dev accuracy; ties go to the
// smaller C.
TuneResult TuneC(const std::vector<FeatureVector> &train_x,
                 const std::vector<std::string> &train_y,
                 const std::vector<FeatureVector> &dev_x,
                 const std::vector<std::string> &dev_y,
                 const WeightLayout &layout, const std::vector<double> &grid,
                 const TrainConfig &cfg);

const std::vector<double> &DefaultCGrid();

}  // namespace datag

#endif  // DATAG_LINEAR_MODEL_H_
