#ifndef DATAG_DIALOGUE_H_
#define DATAG_DIALOGUE_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace datag {

enum class Corpus {
  kSwda,
  kAmi,
  kMapTask,
  kVerbMobil,
  kOasis,
  kDialogBank,
  kCapc,
  kSLogs,
  kCustom,
};

// Canonical upper-case names: SWDA, AMI, MAPTASK, ...
std::string_view CorpusName(Corpus corpus);
// Case-insensitive; also accepts "s-logs" and "db". Throws UsageError.
Corpus ParseCorpus(std::string_view name);
const std::vector<Corpus> &AllCorpora();

// The three semantic dimensions of the scheme.
enum class Dimension { kTask, kSom, kFeedback };

std::string_view DimensionName(Dimension dim);  // TASK, SOM, FEEDBACK
Dimension ParseDimension(std::string_view name);
inline constexpr Dimension kDimensions[] = {Dimension::kTask, Dimension::kSom,
                                            Dimension::kFeedback};

// A dialogue act tag: a taxonomy node within a dimension.
struct DATag {
  Dimension dimension = Dimension::kTask;
  std::string node;

  std::string ToString() const;  // "TASK:SetQ"
  bool operator==(const DATag &) const = default;
};

inline constexpr int kRootHead = -1;

struct TokenAnnotation {
  int index = 0;
  std::string form;
  std::string pos;
  std::string dep_relation;
  int head = kRootHead;  // token index, or kRootHead

  bool operator==(const TokenAnnotation &) const = default;
};

struct SourceTag {
  std::string scheme;
  std::string tag;

  bool operator==(const SourceTag &) const = default;
};

struct Utterance {
  std::string utterance_id;
  std::string speaker;
  int position = 0;
  std::string raw_text;
  std::vector<SourceTag> source_tags;
  std::optional<std::string> normalized_text;
  // An empty vector on a non-empty utterance means the sidecar could not be
  // aligned; syntactic features are then disabled for it.
  std::optional<std::vector<TokenAnnotation>> tokens;
  std::optional<std::vector<DATag>> mapped_tags;

  bool operator==(const Utterance &) const = default;
};

struct UnifiedDialogue {
  std::string dialogue_id;
  Corpus corpus = Corpus::kCustom;
  std::vector<Utterance> utterances;
  std::map<std::string, std::string> metadata;

  bool operator==(const UnifiedDialogue &) const = default;
};

using DialogueCollection = std::vector<UnifiedDialogue>;

// Metadata keys shared across stages.
inline constexpr char kMetaSplit[] = "split";
inline constexpr char kMetaIngested[] = "ingested_utterances";

// Line-delimited unified form: one JSON dialogue object per line.
std::string DialogueToJsonLine(const UnifiedDialogue &dialogue);
UnifiedDialogue DialogueFromJsonLine(std::string_view line,
                                     const std::string &locator);

void WriteDialogues(std::ostream &out, const DialogueCollection &dialogues);
void WriteDialogues(const std::string &path,
                    const DialogueCollection &dialogues);
DialogueCollection ReadDialogues(std::istream &in, const std::string &name);
DialogueCollection ReadDialogues(const std::string &path);

// Throws ValidationError on duplicate dialogue ids or non-consecutive
// positions.
void CheckCollection(const DialogueCollection &dialogues);

size_t CountUtterances(const DialogueCollection &dialogues);

}  // namespace datag

#endif  // DATAG_DIALOGUE_H_
