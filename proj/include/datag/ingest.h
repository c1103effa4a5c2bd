#ifndef DATAG_INGEST_H_
#define DATAG_INGEST_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datag/dialogue.h"
#include "datag/taxonomy.h"

namespace datag {

// Describes where a corpus lives below a root directory and what a complete
// copy must contain.
struct CorpusManifest {
  Corpus corpus = Corpus::kCustom;
  // Patterns relative to the root; '*' and '?' may cross directory levels.
  std::vector<std::string> file_globs;
  std::optional<long> expected_dialogues;
  std::optional<long> expected_utterances;
  // Optional "dialogue_id<TAB>split" file, relative to the root.
  std::optional<std::string> split_file;
  std::map<std::string, long> expected_splits;
  // In annotated mode every utterance must carry a source tag.
  bool annotated = true;
  // SWDA only: merge '+' continuation units into their antecedent.
  bool ws97 = true;

  static CorpusManifest Load(const std::string &path);
  static CorpusManifest FromJson(const std::string &text,
                                 const std::string &locator);
  // Built-in defaults for a corpus's native layout, no expected counts.
  static CorpusManifest Default(Corpus corpus);
  std::string ToJson() const;
};

// Files below `root` matching any of `globs`, sorted lexicographically by
// their root-relative path.
std::vector<std::string> MatchFiles(const std::string &root,
                                    const std::vector<std::string> &globs);

// Reads a corpus in its native format. Throws IoError, ParseError, or
// IntegrityError when declared counts do not match.
DialogueCollection ReadCorpus(const CorpusManifest &manifest,
                              const std::string &root);

// Format readers. Each takes files already matched and sorted.
//
// SWDA: DA-release ".utt" files; lines after the "====" separator have the
// form "<tag> <speaker>.<turn> utt<n>: <text>".
DialogueCollection ReadSwda(const std::vector<std::string> &files, bool ws97);
// MapTask NXT: "<dlg>.<spk>.moves.xml" files whose moves point at words in
// "<dlg>.<spk>.timed-units.xml" (same or sibling "timed-units" directory).
DialogueCollection ReadMapTask(const std::vector<std::string> &files);
// AMI NXT: "<meeting>.<spk>.dialog-act.xml" files pointing into
// "<meeting>.<spk>.words.xml" and the da-types.xml ontology.
DialogueCollection ReadAmi(const std::vector<std::string> &files);
// VerbMobil transcript export: "<turn-id>: <segment> @(<TAG> ...) ..." lines;
// each segment ends at a DA marker. One file per dialogue.
DialogueCollection ReadVerbMobil(const std::vector<std::string> &files);
// BT Oasis XML: <dialogue id> / <u who> / <s sp-act>text</s>.
DialogueCollection ReadOasis(const std::vector<std::string> &files);
// DialogBank DiAML: words/turns with xml:id, functional segments <fs target>
// and <dialogueAct target dimension communicativeFunction sender>.
DialogueCollection ReadDialogBank(const std::vector<std::string> &files);
// "id<TAB>speaker<TAB>tag|tag<TAB>text" lines. CAPC: one dialogue per line;
// S-Logs: one dialogue per file.
DialogueCollection ReadTurnLines(const std::vector<std::string> &files,
                                 Corpus corpus, bool one_dialogue_per_line);

// Applies a split file, returning counts per split.
std::map<std::string, long> ApplySplits(DialogueCollection &dialogues,
                                        const std::string &split_path);

struct StatRow {
  std::string category;
  size_t count = 0;
  double percent = 0.0;  // of corpus utterances
};

struct StatReport {
  Level level = Level::kDimension;
  std::vector<StatRow> rows;
  size_t total = 0;                // sum of row counts
  size_t corpus_utterances = 0;    // utterances before mapping
  size_t covered_utterances = 0;   // utterances with a tag at this level
  double coverage_percent = 0.0;

  std::string ToTsv() const;
};

// Per-category counts of mapped tags at `level`. Throws UsageError when no
// utterance carries mapped tags.
StatReport CorpusStats(const DialogueCollection &dialogues, Level level,
                       const Taxonomy &taxonomy);

}  // namespace datag

#endif  // DATAG_INGEST_H_
