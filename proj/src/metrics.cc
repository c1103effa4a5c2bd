#include "datag/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "datag/errors.h"

namespace datag {

namespace {

void CheckAligned(size_t a, size_t b, const char *what) {
  if (a != b) {
    throw UsageError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                     " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

double Accuracy(const std::vector<std::string> &predicted,
                const std::vector<std::string> &gold) {
  CheckAligned(predicted.size(), gold.size(), "accuracy");
  if (gold.empty()) throw UsageError("accuracy of an empty set");
  size_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) correct += predicted[i] == gold[i];
  return static_cast<double>(correct) / gold.size();
}

std::map<std::string, ClassScore> PerClassScores(
    const std::vector<std::string> &predicted, const std::vector<std::string> &gold) {
  CheckAligned(predicted.size(), gold.size(), "per-class scores");
  std::map<std::string, ClassScore> out;
  for (size_t i = 0; i < gold.size(); ++i) {
    ++out[predicted[i]].predicted;
    ++out[gold[i]].gold;
    if (predicted[i] == gold[i]) ++out[gold[i]].true_positives;
  }
  return out;
}

std::string MajorityLabel(const std::vector<std::string> &train_labels) {
  if (train_labels.empty()) throw UsageError("majority label of an empty set");
  std::map<std::string, size_t> counts;
  for (const auto &l : train_labels) ++counts[l];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

ContingencyTable Contingency(const std::vector<std::string> &a_predicted,
                             const std::vector<std::string> &b_predicted,
                             const std::vector<std::string> &gold) {
  CheckAligned(a_predicted.size(), gold.size(), "contingency");
  CheckAligned(b_predicted.size(), gold.size(), "contingency");
  ContingencyTable t;
  for (size_t i = 0; i < gold.size(); ++i) {
    const bool a = a_predicted[i] == gold[i];
    const bool b = b_predicted[i] == gold[i];
    if (a && b) {
      ++t.both_correct;
    } else if (a) {
      ++t.only_a_correct;
    } else if (b) {
      ++t.only_b_correct;
    } else {
      ++t.both_wrong;
    }
  }
  return t;
}

double ChiSquare1Sf(double x) {
  if (x <= 0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

double ExactBinomialTwoSided(long b, long c) {
  const long n = b + c;
  if (n == 0) return 1.0;
  const long k = std::min(b, c);
  // Sum of C(n, i) / 2^n for i <= k, in log space to stay finite for large n.
  const double log_half_n = n * std::log(0.5);
  const double lg_n1 = std::lgamma(n + 1.0);
  double tail = 0.0;
  for (long i = 0; i <= k; ++i) {
    tail += std::exp(lg_n1 - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + log_half_n);
  }
  return std::min(1.0, 2.0 * tail);
}

McNemarResult McNemarFromCounts(long b, long c, long exact_below) {
  if (b < 0 || c < 0) throw UsageError("negative disagreement counts");
  McNemarResult r;
  r.table.only_a_correct = b;
  r.table.only_b_correct = c;
  const long n = b + c;
  if (n == 0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.method = "degenerate";
    return r;
  }
  const double d = std::abs(b - c) - 1.0;
  r.statistic = d * d / n;
  if (n >= exact_below) {
    r.p_value = ChiSquare1Sf(r.statistic);
    r.method = "chi2";
  } else {
    r.p_value = ExactBinomialTwoSided(b, c);
    r.method = "exact";
  }
  return r;
}

McNemarResult McNemar(const std::vector<std::string> &a_predicted,
                      const std::vector<std::string> &b_predicted,
                      const std::vector<std::string> &gold, long exact_below) {
  ContingencyTable t = Contingency(a_predicted, b_predicted, gold);
  McNemarResult r = McNemarFromCounts(static_cast<long>(t.only_a_correct),
                                      static_cast<long>(t.only_b_correct), exact_below);
  r.table = t;
  return r;
}

double CohenKappa(const std::vector<std::string> &a,
                  const std::vector<std::string> &b) {
  CheckAligned(a.size(), b.size(), "kappa");
  if (a.empty()) throw UsageError("kappa of an empty set");
  const double n = static_cast<double>(a.size());
  std::map<std::string, std::pair<size_t, size_t>> marginals;
  size_t agree = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    agree += a[i] == b[i];
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto &[label, m] : marginals) pe += (m.first / n) * (m.second / n);
  if (pe >= 1.0) {
    if (po >= 1.0) return 1.0;
    throw DataError("kappa undefined: chance agreement is 1");
  }
  return (po - pe) / (1.0 - pe);
}

}  // namespace datag
