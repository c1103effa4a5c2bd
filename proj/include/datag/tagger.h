#ifndef DATAG_TAGGER_H_
#define DATAG_TAGGER_H_

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "datag/dialogue.h"
#include "datag/features.h"
#include "datag/linear_model.h"
#include "datag/preprocess.h"
#include "datag/svm.h"
#include "datag/taxonomy.h"

namespace datag {

enum class TaggerMode { kSwda42, kIsoSubset };
std::string_view TaggerModeName(TaggerMode mode);  // SWDA42, ISO_SUBSET
TaggerMode ParseTaggerMode(std::string_view name);

// Where the PREV feature comes from at tagging time.
enum class ContextMode { kGoldPrev, kPredictedPrev };
std::string_view ContextModeName(ContextMode mode);  // gold_prev, ...
ContextMode ParseContextMode(std::string_view name);

struct TaggerConfig {
  TaggerMode mode = TaggerMode::kIsoSubset;
  FeatureConfig features;
  TrainConfig train;
  // When false, a function model is trained on the function classes present
  // in the data (training subsets can lack some), and skipped if fewer than
  // two are present. Dimension detectors always need positives.
  bool require_all_classes = true;
};

// Runtime inputs that are not part of a saved model.
struct TagOptions {
  ContextMode context = ContextMode::kGoldPrev;
  const EmbeddingTable *embeddings = nullptr;
  // Needed in SWDA42 mode to derive gold labels.
  const SwdaCollapser *collapser = nullptr;
};

struct TaggedUtterance {
  std::string dialogue_id;
  std::string utterance_id;
  std::string speaker;
  std::vector<DATag> predicted;       // ISO_SUBSET mode
  std::optional<std::string> label;   // SWDA42 mode
  std::map<std::string, double> scores;

  bool operator==(const TaggedUtterance &) const = default;
};

class TaggerModel {
 public:
  TaggerMode mode = TaggerMode::kIsoSubset;
  FeatureConfig features;
  std::shared_ptr<const Vocabulary> vocab;
  std::optional<LinearModel> swda_model;
  std::map<Dimension, LinearModel> dimension_models;
  std::map<Dimension, LinearModel> function_models;
  Taxonomy taxonomy;

  // Throws ValidationError when the mode's required models are missing or a
  // function model's classes are not classifier labels of its dimension.
  void Validate() const;

  // Bundle directory: manifest.json, vocab.tsv, taxonomy.tsv, *.model.
  void Save(const std::string &dir) const;
  static TaggerModel Load(const std::string &dir);
};

// Gold PREV value of an utterance: the collapsed SWDA tag in SWDA42 mode; in
// ISO mode the first mapped tag in dimension order (Task, SOM, Feedback).
std::string GoldContextTag(const Utterance &u, TaggerMode mode,
                           const SwdaCollapser *collapser);
// PREV value derived from a prediction, same conventions.
std::string PredictedContextTag(const TaggedUtterance &t, TaggerMode mode);

// Gold function label of `u` in `dim`: the first mapped tag of that dimension
// that is a classifier label at the dimension's function level.
std::optional<std::string> GoldFunction(const Utterance &u, Dimension dim,
                                        const Taxonomy &taxonomy);
bool HasDimension(const Utterance &u, Dimension dim);

// Trains every model of the requested mode from one shared vocabulary.
// Training PREV values are gold.
TaggerModel TrainTagger(const DialogueCollection &train, const TaggerConfig &cfg,
                        const Taxonomy &taxonomy, const TagOptions &opts);

// Tags one dialogue. Every utterance receives at least one tag: each
// detector fires independently, and when none fires the highest-scoring
// dimension is used.
std::vector<TaggedUtterance> Tag(const TaggerModel &model,
                                 const UnifiedDialogue &dialogue,
                                 const TagOptions &opts);
// All dialogues, in parallel over dialogues.
std::vector<std::vector<TaggedUtterance>> TagCollection(
    const TaggerModel &model, const DialogueCollection &dialogues,
    const TagOptions &opts);

// One JSON object per utterance.
void WriteTagged(std::ostream &out,
                 const std::vector<std::vector<TaggedUtterance>> &tagged);

// Which utterances count for evaluation. Empty speaker set keeps all; the
// others still feed context.
struct EvalFilter {
  std::set<std::string> speakers;  // compared case-insensitively
  bool Keeps(const Utterance &u) const;
};

// Aligned predictions and gold labels over the evaluated instances.
struct LabelPairs {
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
  std::vector<std::string> keys;  // dialogue/utterance
};

// SWDA42 mode: predicted vs collapsed gold tag.
LabelPairs EvaluateFlat(const TaggerModel &model,
                        const DialogueCollection &dialogues,
                        const TagOptions &opts, const EvalFilter &filter);

struct DimensionScore {
  Dimension dimension = Dimension::kTask;
  size_t correct = 0;
  size_t total = 0;
  size_t gold_positives = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct DimensionReport {
  std::vector<DimensionScore> dimensions;  // only those with gold positives
  double micro = 0.0;                      // pooled over reported dimensions
  double macro = 0.0;                      // mean of reported accuracies
  // Per-dimension binary decisions ("1"/"0") for significance tests.
  std::map<Dimension, LabelPairs> decisions;
};

// Binary detector accuracy per dimension over the filtered utterances.
DimensionReport EvaluateDimensions(const TaggerModel &model,
                                   const DialogueCollection &dialogues,
                                   const TagOptions &opts,
                                   const EvalFilter &filter);

// Function classifiers evaluated only on utterances whose gold tags carry a
// function label of that dimension (no error propagation from detectors).
std::map<Dimension, LabelPairs> EvaluateFunctionsGoldDims(
    const TaggerModel &model, const DialogueCollection &dialogues,
    const TagOptions &opts, const EvalFilter &filter);

}  // namespace datag

#endif  // DATAG_TAGGER_H_
