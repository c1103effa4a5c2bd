#include "datag/svm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "datag/errors.h"

namespace datag {

namespace {

void CheckExample(const FeatureVector &x, const WeightLayout &layout) {
  int last = -1;
  for (const auto &[id, v] : x.sparse) {
    if (id < 0 || id >= layout.num_sparse) {
      throw DimensionError("sparse feature id " + std::to_string(id) +
                           " outside [0, " + std::to_string(layout.num_sparse) + ")");
    }
    if (id <= last) throw DataError("sparse feature ids must be strictly increasing");
    last = id;
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  if (static_cast<int>(x.dense.size()) != layout.dense_dim) {
    throw DimensionError("dense block has " + std::to_string(x.dense.size()) +
                         " values, expected " + std::to_string(layout.dense_dim));
  }
  for (double v : x.dense) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

double SquaredNorm(const FeatureVector &x) {
  double s = 1.0;  // bias
  for (const auto &[id, v] : x.sparse) s += v * v;
  for (double v : x.dense) s += v * v;
  return s;
}

void AddScaled(std::vector<double> &w, const FeatureVector &x,
               const WeightLayout &layout, double scale) {
  for (const auto &[id, v] : x.sparse) w[id] += scale * v;
  for (int k = 0; k < layout.dense_dim; ++k) w[layout.num_sparse + k] += scale * x.dense[k];
  w[layout.bias()] += scale;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(C > 0) || !std::isfinite(C)) throw UsageError("C must be positive");
  if (!(tolerance > 0)) throw UsageError("tolerance must be positive");
  if (max_outer_iterations <= 0) throw UsageError("iteration cap must be positive");
}

uint64_t Permuter::Below(uint64_t bound) {
  // Reject the tail that would bias the modulo.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % bound;
  uint64_t r;
  do {
    r = rng_();
  } while (r >= limit);
  return r % bound;
}

void Permuter::Shuffle(std::vector<int> &items) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = Below(i);
    std::swap(items[i - 1], items[j]);
  }
}

double Dot(const std::vector<double> &w, const FeatureVector &x,
           const WeightLayout &layout) {
  double s = w[layout.bias()];
  for (const auto &[id, v] : x.sparse) {
    if (id >= 0 && id < layout.num_sparse) s += w[id] * v;
  }
  const size_t n = std::min<size_t>(x.dense.size(), layout.dense_dim);
  for (size_t k = 0; k < n; ++k) s += w[layout.num_sparse + k] * x.dense[k];
  return s;
}

double PrimalObjective(const std::vector<double> &w,
                       const std::vector<FeatureVector> &xs,
                       const std::vector<int> &ys, const WeightLayout &layout,
                       double C) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    loss += std::max(0.0, 1.0 - ys[i] * Dot(w, xs[i], layout));
  }
  return 0.5 * reg + C * loss;
}

std::vector<double> TrainBinary(const std::vector<FeatureVector> &xs,
                                const std::vector<int> &ys,
                                const WeightLayout &layout,
                                const TrainConfig &cfg, TrainTrace *trace) {
  std::vector<const FeatureVector *> ptrs;
  ptrs.reserve(xs.size());
  for (const auto &x : xs) ptrs.push_back(&x);
  return TrainBinary(ptrs, ys, layout, cfg, trace);
}

std::vector<double> TrainBinary(const std::vector<const FeatureVector *> &xs,
                                const std::vector<int> &ys,
                                const WeightLayout &layout,
                                const TrainConfig &cfg, TrainTrace *trace) {
  cfg.Validate();
  if (xs.size() != ys.size()) throw UsageError("example/label count mismatch");
  bool pos = false;
  bool neg = false;
  for (int y : ys) {
    if (y == 1) {
      pos = true;
    } else if (y == -1) {
      neg = true;
    } else {
      throw UsageError("binary labels must be +1 or -1");
    }
  }
  if (!pos || !neg) {
    throw TrainingError(std::string("binary training needs both signs; only ") +
                        (pos ? "positive" : neg ? "negative" : "no") + " examples given");
  }
  for (const auto *x : xs) CheckExample(*x, layout);

  const int n = static_cast<int>(xs.size());
  const double C = cfg.C;
  std::vector<double> w(layout.size(), 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  for (int i = 0; i < n; ++i) qii[i] = SquaredNorm(*xs[i]);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Permuter perm(cfg.seed);

  int epoch = 0;
  bool converged = false;
  while (epoch < cfg.max_outer_iterations) {
    ++epoch;
    perm.Shuffle(order);
    double max_violation = 0.0;
    for (int i : order) {
      const FeatureVector &x = *xs[i];
      const double y = ys[i];
      const double g = y * Dot(w, x, layout) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] >= C) {
        pg = std::max(g, 0.0);
      }
      max_violation = std::max(max_violation, std::fabs(pg));
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, C);
      const double delta = (alpha[i] - old) * y;
      if (delta != 0.0) AddScaled(w, x, layout, delta);
    }
    if (trace != nullptr) {
      double wn = 0.0;
      for (double v : w) wn += v * v;
      double sa = std::accumulate(alpha.begin(), alpha.end(), 0.0);
      trace->dual_objective.push_back(sa - 0.5 * wn);
      trace->max_violation.push_back(max_violation);
    }
    if (max_violation < cfg.tolerance) {
      converged = true;
      break;
    }
  }
  if (trace != nullptr) {
    trace->alpha = alpha;
    trace->epochs = epoch;
    trace->converged = converged;
  }
  return w;
}

}  // namespace datag
