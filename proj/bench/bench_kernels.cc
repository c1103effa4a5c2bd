// OpenMP kernels against their serial references on synthetic data.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "datag/features.h"
#include "datag/linear_model.h"
#include "datag/svm.h"

namespace datag {
namespace {

// `n` sparse examples over `d` features with `k` roughly separable classes.
struct Problem {
  std::vector<FeatureVector> xs;
  std::vector<std::string> labels;
  WeightLayout layout;
};

Problem MakeProblem(int n, int d, int k) {
  std::mt19937_64 rng(17);
  Problem p;
  p.layout = WeightLayout{d, 0};
  for (int i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng() % k);
    FeatureVector x;
    x.sparse.emplace_back(y, 1.0);
    for (int j = 0; j < 12; ++j) x.sparse.emplace_back(k + static_cast<int>(rng() % (d - k)), 1.0);
    std::sort(x.sparse.begin(), x.sparse.end());
    x.sparse.erase(std::unique(x.sparse.begin(), x.sparse.end(),
                               [](auto &a, auto &b) { return a.first == b.first; }),
                   x.sparse.end());
    p.xs.push_back(std::move(x));
    p.labels.push_back("c" + std::to_string(y));
  }
  return p;
}

const Problem &SharedProblem() {
  static const Problem p = MakeProblem(20000, 5000, 24);
  return p;
}

void BM_TrainOvr(benchmark::State &state) {
  const Problem &p = SharedProblem();
  TrainConfig cfg;
  cfg.C = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(TrainOvr(p.xs, p.labels, p.layout, cfg));
}
BENCHMARK(BM_TrainOvr)->Unit(benchmark::kMillisecond);

void BM_TrainOvrSerial(benchmark::State &state) {
  const Problem &p = SharedProblem();
  TrainConfig cfg;
  cfg.C = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(TrainOvrSerial(p.xs, p.labels, p.layout, cfg));
}
BENCHMARK(BM_TrainOvrSerial)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State &state) {
  const Problem &p = SharedProblem();
  static const LinearModel model = TrainOvr(p.xs, p.labels, p.layout, TrainConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(PredictBatch(model, p.xs));
}
BENCHMARK(BM_PredictBatch)->Unit(benchmark::kMillisecond);

void BM_PredictSerial(benchmark::State &state) {
  const Problem &p = SharedProblem();
  static const LinearModel model = TrainOvr(p.xs, p.labels, p.layout, TrainConfig{});
  for (auto _ : state) {
    std::vector<std::string> out;
    out.reserve(p.xs.size());
    for (const auto &x : p.xs) out.push_back(Predict(model, x).label);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);

struct Texts {
  std::vector<Utterance> utterances;
  std::vector<ExtractRequest> requests;
  Vocabulary vocab;
  FeatureConfig cfg = FeatureConfig::Parse("1-2-3-grams+PREV");
};

const Texts &SharedTexts() {
  static const Texts *t = [] {
    auto *out = new Texts;
    std::mt19937_64 rng(3);
    const char *words[] = {"i", "think", "that", "we", "should", "go", "yeah", "okay",
                           "the", "window", "is", "open", "uh", "huh", "right", "so"};
    for (int i = 0; i < 50000; ++i) {
      Utterance u;
      u.utterance_id = "u" + std::to_string(i);
      std::string text;
      const int len = 1 + static_cast<int>(rng() % 15);
      for (int w = 0; w < len; ++w) {
        if (w) text += ' ';
        text += words[rng() % std::size(words)];
      }
      u.raw_text = text;
      u.normalized_text = text;
      out->utterances.push_back(std::move(u));
    }
    for (const auto &u : out->utterances) {
      Extract(u, "sd", out->cfg, out->vocab, nullptr);
    }
    out->vocab.Freeze();
    for (const auto &u : out->utterances) out->requests.push_back({&u, "sd"});
    return out;
  }();
  return *t;
}

void BM_ExtractBatch(benchmark::State &state) {
  const Texts &t = SharedTexts();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ExtractBatch(t.requests, t.cfg, t.vocab, nullptr));
  }
}
BENCHMARK(BM_ExtractBatch)->Unit(benchmark::kMillisecond);

void BM_ExtractBatchSerial(benchmark::State &state) {
  const Texts &t = SharedTexts();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ExtractBatchSerial(t.requests, t.cfg, t.vocab, nullptr));
  }
}
BENCHMARK(BM_ExtractBatchSerial)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace datag

BENCHMARK_MAIN();
