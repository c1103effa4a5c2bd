#ifndef DATAG_FEATURES_H_
#define DATAG_FEATURES_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "datag/dialogue.h"

namespace datag {

// Feature families. Names follow the experiment tables:
// "1-grams", "1-2-grams", "1-2-3-grams", "PREV", "POS", "I-POS", "DEP",
// "I-DEP", "WE", joined with '+'.
struct FeatureConfig {
  bool use_unigrams = true;
  bool use_bigrams = false;
  bool use_trigrams = false;
  bool use_prev_da = false;
  bool use_pos = false;
  bool use_ipos = false;
  bool use_dep = false;
  bool use_idep = false;
  bool use_embeddings = false;
  int embedding_dim = 0;

  // Throws UsageError on unknown family names or an empty configuration.
  static FeatureConfig Parse(std::string_view spec);
  std::string Name() const;
  bool NeedsTokens() const { return use_pos || use_ipos || use_dep || use_idep; }
  bool AnyEnabled() const;

  bool operator==(const FeatureConfig &) const = default;
};

// Sorted sparse indicators plus an optional dense tail.
struct FeatureVector {
  std::vector<std::pair<int, double>> sparse;  // strictly increasing ids
  std::vector<double> dense;

  bool operator==(const FeatureVector &) const = default;
};

inline constexpr char kNoPrevTag[] = "NONE";

// Feature-name <-> id map. Grows until frozen.
class Vocabulary {
 public:
  // Id of `name`, adding it when not frozen; -1 when frozen and unseen.
  int Intern(std::string_view name);
  // -1 when unseen.
  int Find(std::string_view name) const;
  const std::string &Name(int id) const { return names_[id]; }

  void Freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  int size() const { return static_cast<int>(names_.size()); }

  // "feature-name<TAB>id" lines, ordered by id.
  void Save(std::ostream &out) const;
  void Save(const std::string &path) const;
  // Loaded vocabularies are frozen.
  static Vocabulary Load(std::istream &in, const std::string &name);
  static Vocabulary Load(const std::string &path);

 private:
  struct Hash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_map<std::string, int, Hash, std::equal_to<>> ids_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

// Word vectors keyed by token.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim) : dim_(dim) {}

  // "token v1 .. vd" per line; a leading word2vec "count dim" header is
  // skipped. Throws ParseError with the line number on a dimension mismatch.
  static EmbeddingTable Load(const std::string &path, int expected_dim);
  static EmbeddingTable Parse(std::istream &in, const std::string &name,
                              int expected_dim);

  void Add(std::string token, std::vector<float> vec);
  // Exact lookup, then lowercase fallback; nullptr when absent.
  const std::vector<float> *Find(std::string_view token) const;
  int dim() const { return dim_; }
  size_t size() const { return table_.size(); }

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<float>> table_;
};

// Names of the sparse features of `u` (unsorted, may repeat).
std::vector<std::string> SparseFeatureNames(const Utterance &u,
                                            std::string_view prev_tag,
                                            const FeatureConfig &cfg);

// Binary indicator features plus an averaged embedding block. With an
// unfrozen vocabulary, unseen names are added; with a frozen one they are
// ignored. Throws ConfigError when a syntactic family is enabled and the
// utterance has no sidecar tokens, or when embeddings are enabled without a
// table.
FeatureVector Extract(const Utterance &u, std::string_view prev_tag,
                      const FeatureConfig &cfg, Vocabulary &vocab,
                      const EmbeddingTable *embeddings);
// Read-only variant; `vocab` must be frozen.
FeatureVector ExtractFrozen(const Utterance &u, std::string_view prev_tag,
                            const FeatureConfig &cfg, const Vocabulary &vocab,
                            const EmbeddingTable *embeddings);

struct ExtractRequest {
  const Utterance *utterance = nullptr;
  std::string prev_tag;
};

// Batch extraction over a frozen vocabulary, parallel over requests.
std::vector<FeatureVector> ExtractBatch(const std::vector<ExtractRequest> &requests,
                                        const FeatureConfig &cfg,
                                        const Vocabulary &vocab,
                                        const EmbeddingTable *embeddings);
// Serial reference for ExtractBatch.
std::vector<FeatureVector> ExtractBatchSerial(
    const std::vector<ExtractRequest> &requests, const FeatureConfig &cfg,
    const Vocabulary &vocab, const EmbeddingTable *embeddings);

// CoNLL-U sidecar: sentence blocks carrying "# utterance_id = <id>". Ids are
// either "<dialogue_id>/<utterance_id>" or a bare utterance id. A block with
// "# alignment = failed" maps to an empty token list.
using Annotations = std::map<std::string, std::vector<TokenAnnotation>>;
Annotations LoadConllu(const std::string &path);
Annotations ParseConllu(std::istream &in, const std::string &name);
void WriteConllu(std::ostream &out, const std::string &key,
                 const std::vector<TokenAnnotation> &tokens);

struct AlignmentReport {
  size_t aligned = 0;
  size_t failed = 0;   // present but token count differs, or marked failed
  size_t missing = 0;  // no sidecar entry
  std::vector<std::string> failed_ids;
};

// Attaches sidecar tokens to utterances whose whitespace token count matches;
// mismatches get an empty token list (syntactic features disabled).
AlignmentReport AttachAnnotations(DialogueCollection &dialogues,
                                  const Annotations &annotations);

}  // namespace datag

#endif  // DATAG_FEATURES_H_
