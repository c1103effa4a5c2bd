#ifndef DATAG_METRICS_H_
#define DATAG_METRICS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace datag {

// Fraction of exact matches. Throws UsageError on empty or misaligned input.
double Accuracy(const std::vector<std::string> &predicted,
                const std::vector<std::string> &gold);

struct ClassScore {
  size_t true_positives = 0;
  size_t predicted = 0;  // tp + fp
  size_t gold = 0;       // tp + fn
  double precision() const { return predicted ? double(true_positives) / predicted : 0.0; }
  double recall() const { return gold ? double(true_positives) / gold : 0.0; }
};

// Per-label precision/recall over every label seen in either vector.
std::map<std::string, ClassScore> PerClassScores(
    const std::vector<std::string> &predicted, const std::vector<std::string> &gold);

// Most frequent training label (ties: lexicographically smallest).
std::string MajorityLabel(const std::vector<std::string> &train_labels);

struct ContingencyTable {
  size_t both_correct = 0;
  size_t only_a_correct = 0;  // b
  size_t only_b_correct = 0;  // c
  size_t both_wrong = 0;
  size_t total() const { return both_correct + only_a_correct + only_b_correct + both_wrong; }
};

ContingencyTable Contingency(const std::vector<std::string> &a_predicted,
                             const std::vector<std::string> &b_predicted,
                             const std::vector<std::string> &gold);

inline constexpr long kMcNemarExactBelow = 25;

struct McNemarResult {
  ContingencyTable table;
  double statistic = 0.0;  // (|b-c|-1)^2 / (b+c)
  double p_value = 1.0;
  std::string method;      // "chi2", "exact", "degenerate"
};

// Continuity-corrected chi-square (1 df) when b+c >= exact_below, otherwise
// the exact two-sided binomial test on (b, b+c, 1/2). b+c = 0 gives p = 1.
McNemarResult McNemarFromCounts(long b, long c,
                                long exact_below = kMcNemarExactBelow);
McNemarResult McNemar(const std::vector<std::string> &a_predicted,
                      const std::vector<std::string> &b_predicted,
                      const std::vector<std::string> &gold,
                      long exact_below = kMcNemarExactBelow);

// Upper tail of the chi-square distribution with one degree of freedom.
double ChiSquare1Sf(double x);
// min(1, 2 P[X <= min(b, c)]) for X ~ Binomial(b + c, 1/2).
double ExactBinomialTwoSided(long b, long c);

// Cohen's kappa from marginal label frequencies. When chance agreement is 1,
// returns 1 if observed agreement is 1 and throws DataError otherwise.
double CohenKappa(const std::vector<std::string> &a,
                  const std::vector<std::string> &b);

}  // namespace datag

#endif  // DATAG_METRICS_H_
