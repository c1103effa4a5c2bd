// Dual coordinate descent against an independent solver.
//
// The oracle maximizes the same box-constrained dual with accelerated
// projected gradient (FISTA) over the explicit Gram matrix and certifies its
// answer with the duality gap, so it shares no code with the trainer.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "datag/errors.h"
#include "datag/linear_model.h"
#include "datag/svm.h"
#include "doctest.h"
#include "oracles.h"

namespace datag {
namespace {

using oracles::RandomSvmInstance;
using oracles::SolveSvm;
using oracles::SvmInstance;
using oracles::SvmOptimum;

TEST_CASE("dual coordinate descent matches the dual oracle on 25 instances") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 25; ++trial) {
    CAPTURE(trial);
    SvmInstance inst = RandomSvmInstance(rng);
    CAPTURE(inst.xs.size());
    CAPTURE(inst.C);
    SvmOptimum oracle = SolveSvm(inst);
    REQUIRE(oracle.relative_gap() <= 1e-5);

    TrainConfig cfg;
    cfg.C = inst.C;
    cfg.tolerance = 1e-6;
    cfg.max_outer_iterations = 200000;
    cfg.seed = 1 + trial;
    TrainTrace trace;
    std::vector<double> w = TrainBinary(inst.xs, inst.ys, inst.layout, cfg, &trace);
    const double primal = PrimalObjective(w, inst.xs, inst.ys, inst.layout, inst.C);
    CHECK(trace.converged);
    // Within 1e-3 of the optimum, which lies in [oracle.dual, oracle.primal].
    CHECK(primal >= oracle.dual * (1.0 - 1e-9) - 1e-12);
    CHECK(std::abs(primal - oracle.primal) <= 1e-3 * std::abs(oracle.primal));

    REQUIRE(trace.alpha.size() == inst.xs.size());
    for (double a : trace.alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= inst.C);
    }
    for (size_t e = 1; e < trace.dual_objective.size(); ++e) {
      CHECK(trace.dual_objective[e] >=
            trace.dual_objective[e - 1] - 1e-12 * std::abs(trace.dual_objective[e - 1]));
    }
    CHECK(trace.max_violation.back() < cfg.tolerance);
    // The reported dual objective is the oracle's dual at the trainer's alphas.
    CHECK(trace.dual_objective.back() <= oracle.primal * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("primal objective of a hand instance") {
  // One feature, two points, w = (1, 0): margins 1 and 2, no loss.
  WeightLayout layout{1, 0};
  std::vector<FeatureVector> xs(2);
  xs[0].sparse = {{0, 1.0}};
  xs[1].sparse = {{0, -2.0}};
  std::vector<int> ys = {1, -1};
  std::vector<double> w = {1.0, 0.0};
  CHECK(PrimalObjective(w, xs, ys, layout, 1.0) == doctest::Approx(0.5));
  w = {0.5, 0.0};  // margins 0.5 and 1 -> loss 0.5
  CHECK(PrimalObjective(w, xs, ys, layout, 2.0) == doctest::Approx(0.125 + 1.0));
}

TEST_CASE("training is deterministic for a seed") {
  std::mt19937_64 rng(3);
  SvmInstance inst = RandomSvmInstance(rng);
  TrainConfig cfg;
  cfg.C = 1.0;
  auto a = TrainBinary(inst.xs, inst.ys, inst.layout, cfg);
  auto b = TrainBinary(inst.xs, inst.ys, inst.layout, cfg);
  CHECK(a == b);
}

TEST_CASE("scaling features by k and C by 1/k^2 keeps the decision direction") {
  // Separable toy data, no bias dependence: symmetric around the origin.
  WeightLayout layout{2, 0};
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < 20; ++i) {
    double a = u(rng), b = u(rng) - 1.25;
    FeatureVector p, n;
    p.sparse = {{0, a}, {1, b}};
    n.sparse = {{0, -a}, {1, -b}};
    xs.push_back(p);
    ys.push_back(1);
    xs.push_back(n);
    ys.push_back(-1);
  }
  TrainConfig cfg;
  cfg.C = 1.0;
  cfg.tolerance = 1e-8;
  cfg.max_outer_iterations = 100000;
  auto w = TrainBinary(xs, ys, layout, cfg);
  for (double k : {0.5, 3.0, 10.0}) {
    CAPTURE(k);
    std::vector<FeatureVector> scaled = xs;
    for (auto &x : scaled) {
      for (auto &[id, v] : x.sparse) v *= k;
    }
    TrainConfig sc = cfg;
    sc.C = cfg.C / (k * k);
    auto ws = TrainBinary(scaled, ys, layout, sc);
    const double cos = (w[0] * ws[0] + w[1] * ws[1]) /
                       (std::hypot(w[0], w[1]) * std::hypot(ws[0], ws[1]));
    CHECK(cos > 0.999);
    for (size_t i = 0; i < xs.size(); ++i) {
      CHECK((Dot(w, xs[i], layout) > 0) == (Dot(ws, scaled[i], layout) > 0));
    }
  }
}

TEST_CASE("input contracts") {
  WeightLayout layout{3, 0};
  std::vector<FeatureVector> xs(2);
  xs[0].sparse = {{0, 1.0}};
  xs[1].sparse = {{1, 1.0}};
  TrainConfig cfg;
  SUBCASE("single class") {
    CHECK_THROWS_AS(TrainBinary(xs, {1, 1}, layout, cfg), TrainingError);
  }
  SUBCASE("id out of range") {
    xs[1].sparse = {{7, 1.0}};
    CHECK_THROWS_AS(TrainBinary(xs, {1, -1}, layout, cfg), DimensionError);
  }
  SUBCASE("unsorted ids") {
    xs[1].sparse = {{2, 1.0}, {1, 1.0}};
    CHECK_THROWS_AS(TrainBinary(xs, {1, -1}, layout, cfg), DataError);
  }
  SUBCASE("non-finite value") {
    xs[1].sparse = {{1, std::nan("")}};
    CHECK_THROWS_AS(TrainBinary(xs, {1, -1}, layout, cfg), DataError);
  }
  SUBCASE("dense mismatch") {
    xs[1].dense = {1.0};
    CHECK_THROWS_AS(TrainBinary(xs, {1, -1}, layout, cfg), DimensionError);
  }
  SUBCASE("bad C") {
    cfg.C = 0.0;
    CHECK_THROWS_AS(TrainBinary(xs, {1, -1}, layout, cfg), UsageError);
  }
}

TEST_CASE("Dot ignores ids outside the layout") {
  WeightLayout layout{2, 1};
  std::vector<double> w = {1.0, 2.0, 3.0, 0.5};
  FeatureVector x;
  x.sparse = {{1, 1.0}};
  x.dense = {2.0};
  const double base = Dot(w, x, layout);
  CHECK(base == doctest::Approx(2.0 + 6.0 + 0.5));
  x.sparse.emplace_back(9, 5.0);
  CHECK(Dot(w, x, layout) == base);
}

TEST_CASE("permuter is a uniform shuffle") {
  Permuter p(5);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[p.Below(4)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  std::vector<int> items = {0, 1, 2, 3, 4, 5, 6, 7};
  p.Shuffle(items);
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

}  // namespace
}  // namespace datag
