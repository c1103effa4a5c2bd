#ifndef DATAG_SVM_H_
#define DATAG_SVM_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "datag/features.h"

namespace datag {

struct TrainConfig {
  double C = 0.1;
  int max_outer_iterations = 1000;
  // Stop once the largest projected-gradient violation of an epoch is below
  // this value.
  double tolerance = 1e-3;
  uint64_t seed = 1;
  // Shrinking is accepted for configuration compatibility but not used; the
  // unshrunk solver is what the oracle tests cover.
  bool shrinking = false;

  // Throws UsageError unless C > 0, tolerance > 0 and the cap is positive.
  void Validate() const;
};

// Layout of a weight vector: [sparse ids | dense block | bias].
struct WeightLayout {
  int num_sparse = 0;
  int dense_dim = 0;
  int size() const { return num_sparse + dense_dim + 1; }
  int bias() const { return num_sparse + dense_dim; }

  bool operator==(const WeightLayout &) const = default;
};

// Per-epoch instrumentation of a binary run.
struct TrainTrace {
  std::vector<double> dual_objective;  // after each epoch
  std::vector<double> max_violation;   // during each epoch
  std::vector<double> alpha;           // final dual variables
  int epochs = 0;
  bool converged = false;
};

// w.x + bias over the layout; sparse ids outside [0, num_sparse) are ignored.
double Dot(const std::vector<double> &w, const FeatureVector &x,
           const WeightLayout &layout);

// ½‖w‖² + C Σ max(0, 1 − y w.x).
double PrimalObjective(const std::vector<double> &w,
                       const std::vector<FeatureVector> &xs,
                       const std::vector<int> &ys, const WeightLayout &layout,
                       double C);

// L1-loss L2-regularized SVM by dual coordinate descent. Labels are ±1.
// Throws TrainingError when only one sign is present, DataError on
// non-finite values and DimensionError on layout mismatches.
std::vector<double> TrainBinary(const std::vector<FeatureVector> &xs,
                                const std::vector<int> &ys,
                                const WeightLayout &layout,
                                const TrainConfig &cfg,
                                TrainTrace *trace = nullptr);
// Same, over borrowed examples.
std::vector<double> TrainBinary(const std::vector<const FeatureVector *> &xs,
                                const std::vector<int> &ys,
                                const WeightLayout &layout,
                                const TrainConfig &cfg,
                                TrainTrace *trace = nullptr);

// Fisher-Yates over mt19937_64 with rejection sampling, so permutations do
// not depend on the standard library's distribution implementations.
class Permuter {
 public:
  explicit Permuter(uint64_t seed) : rng_(seed) {}
  // Uniform in [0, bound).
  uint64_t Below(uint64_t bound);
  void Shuffle(std::vector<int> &items);

 private:
  std::mt19937_64 rng_;
};

}  // namespace datag

#endif  // DATAG_SVM_H_
