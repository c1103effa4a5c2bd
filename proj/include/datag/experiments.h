#ifndef DATAG_EXPERIMENTS_H_
#define DATAG_EXPERIMENTS_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "datag/dialogue.h"
#include "datag/features.h"
#include "datag/ingest.h"
#include "datag/metrics.h"
#include "datag/preprocess.h"
#include "datag/schema_map.h"
#include "datag/svm.h"
#include "datag/tagger.h"
#include "datag/taxonomy.h"

namespace datag {

// A named evaluation set: one corpus, optionally one split, optionally only
// some speakers' turns.
struct TestSetSpec {
  std::string name;
  Corpus corpus = Corpus::kCustom;
  std::optional<std::string> split;
  std::set<std::string> speakers;
};

struct CorpusSubset {
  std::string name;
  std::vector<Corpus> corpora;
};

struct FeatureRow {
  std::string name;      // row label
  FeatureConfig features;
};

enum class ExperimentKind { kFeatureStudy, kDimensions, kAblation };

// A table-producing experiment, read from a JSON file:
//   {"name": "table3", "kind": "feature_study", "mode": "SWDA42",
//    "train": {"corpora": ["SWDA"], "split": "train"},
//    "dev": {"split": "dev"},
//    "test_sets": [{"name": "SWDA", "corpus": "SWDA", "split": "test"}],
//    "features": ["1-grams", {"name": "+ PREV", "spec": "1-2-grams+PREV"}],
//    "C": 0.1, "seed": 1, "embedding_dim": 300,
//    "tune": {"features": "1-2-grams+PREV", "grid": [1.0, 0.1]}}
// Ablations add "subsets": [{"name": "ALL", "corpora": [...]}, ...].
struct ExperimentConfig {
  std::string name;
  std::string title;
  ExperimentKind kind = ExperimentKind::kFeatureStudy;
  TaggerMode mode = TaggerMode::kIsoSubset;
  std::vector<Corpus> train_corpora;
  std::optional<std::string> train_split;
  std::optional<std::string> dev_split;
  std::vector<TestSetSpec> test_sets;
  std::vector<FeatureRow> features;
  std::vector<CorpusSubset> subsets;
  TrainConfig train;
  int embedding_dim = 0;
  bool majority_baseline = true;
  std::optional<FeatureRow> tune_features;
  std::vector<double> tune_grid;
  ContextMode context = ContextMode::kGoldPrev;
  double alpha = 0.05;
  long exact_below = kMcNemarExactBelow;
  bool require_all_classes = true;

  static ExperimentConfig Load(const std::string &path);
  static ExperimentConfig FromJson(const std::string &text, const std::string &locator);
  // Corpora the experiment reads, for training or testing.
  std::set<Corpus> RequiredCorpora() const;
  bool NeedsEmbeddings() const;
  bool NeedsSidecars() const;
};

// Prepared corpora plus shared resources. Collections are fully processed:
// read, mapped (ISO experiments), normalized, sidecars attached.
struct ExperimentData {
  std::map<Corpus, DialogueCollection> corpora;
  const EmbeddingTable *embeddings = nullptr;
  const SwdaCollapser *collapser = nullptr;
  const Taxonomy *taxonomy = nullptr;
};

struct Cell {
  std::optional<double> value;  // accuracy as a fraction
  bool star = false;
};

struct SignificanceRow {
  std::string column;
  std::string row_a;
  std::string row_b;
  double accuracy_a = 0.0;
  double accuracy_b = 0.0;
  McNemarResult result;
  bool significant = false;
};

struct ResultTable {
  std::string name;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<Cell>> cells;  // rows x columns
  std::vector<SignificanceRow> significance;
  std::vector<std::pair<std::string, std::string>> notes;
  // (C, dev accuracy) per grid value when the experiment tunes C.
  std::vector<std::pair<double, double>> tuning;

  std::optional<double> Value(const std::string &row, const std::string &column) const;
  // Percentages with one decimal, "--" for absent cells, '*' for stars.
  std::string ToTsv() const;
  std::string SignificanceTsv() const;
  std::string Render() const;
};

// Dialogues of `collection` whose split metadata equals `split`; all of them
// when split is unset. Throws UsageError when a split selects nothing.
DialogueCollection SelectSplit(const DialogueCollection &collection,
                               const std::optional<std::string> &split);

// Trains per feature row, evaluates on every test set; McNemar between
// adjacent rows per column, starring significant gains.
ResultTable RunFeatureStudy(const ExperimentConfig &cfg, const ExperimentData &data);
// Binary dimension accuracies (rows General/SOM/Feedback/Overall) for the
// first feature row.
ResultTable RunDimensionStudy(const ExperimentConfig &cfg, const ExperimentData &data);
// Trains the first feature row per corpus subset; McNemar of every row
// against the first.
ResultTable RunAblation(const ExperimentConfig &cfg, const ExperimentData &data);
ResultTable RunExperiment(const ExperimentConfig &cfg, const ExperimentData &data);

// Accuracy of one trained model on a test set: flat accuracy in SWDA42 mode,
// Task function accuracy with gold dimensions in ISO mode.
LabelPairs EvaluateOn(const TaggerModel &model, const DialogueCollection &test,
                      const TestSetSpec &spec, const TagOptions &opts);

// Loading pipeline used by the command line and the acceptance suite.
struct PrepareOptions {
  bool map = true;                 // apply the rule tables
  const RuleSet *rules = nullptr;
  const Taxonomy *taxonomy = nullptr;
  const SwdaCollapser *collapser = nullptr;
  NormalizationConfig normalization;
  std::optional<std::string> sidecar_path;  // CoNLL-U file, if any
};

struct PrepareReport {
  size_t ingested = 0;
  size_t dropped_by_mapping = 0;
  size_t dropped_empty = 0;
  std::optional<AlignmentReport> alignment;
  std::optional<DropReport> drops;
};

DialogueCollection PrepareCorpus(const CorpusManifest &manifest,
                                 const std::string &root, const PrepareOptions &opts,
                                 PrepareReport *report = nullptr);
// Same for an already read collection.
DialogueCollection PrepareCollection(DialogueCollection dialogues,
                                     const PrepareOptions &opts,
                                     PrepareReport *report = nullptr);

}  // namespace datag

#endif  // DATAG_EXPERIMENTS_H_
