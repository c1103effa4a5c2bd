#ifndef DATAG_PREPROCESS_H_
#define DATAG_PREPROCESS_H_

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "datag/dialogue.h"

namespace datag {

struct NormalizationConfig {
  bool lowercase = true;
  bool preserve_I = true;
  bool keep_apostrophes = true;
  bool strip_special = true;
};

// Surface normalization shared by training and test corpora:
//  - transcription markup is removed: <...> spans (with content), brace codes
//    such as "{F " (content kept), brackets, '+', '#', '/';
//  - non-ASCII bytes are deleted;
//  - an apostrophe survives only between two letters;
//  - any other non-alphanumeric character separates tokens;
//  - tokens are lowercased except the standalone pronoun "I";
//  - whitespace collapses to single spaces, trimmed.
// Idempotent for the default configuration.
std::string Normalize(std::string_view text,
                      const NormalizationConfig &cfg = {});

// Whitespace tokenization of normalized text.
std::vector<std::string> SplitTokens(std::string_view normalized);

// Strips DAMSL modifiers from a raw SWDA tag: keeps the first of several
// comma/semicolon separated tags, removes "(", ")", "@", "*", and drops a
// "^suffix" except for the tags that keep it (qy^d, qw^d, b^m) and the
// special cases nn^e -> ng, ny^e -> na. Tags starting with '^' are kept.
std::string SwdaBaseTag(std::string_view raw_tag);

// WS97 collapse of SWDA tags onto the 42-tag inventory. The table maps base
// tags (see SwdaBaseTag) to collapsed tags.
class SwdaCollapser {
 public:
  // Tab-separated "raw<TAB>collapsed" lines, '#' comments.
  static SwdaCollapser Load(const std::string &path);
  static SwdaCollapser FromEntries(std::map<std::string, std::string> table);

  // Throws DataError naming the tag when not covered.
  std::string Collapse(std::string_view raw_tag) const;
  bool Covers(std::string_view raw_tag) const;
  std::set<std::string> Image() const;

 private:
  std::map<std::string, std::string, std::less<>> table_;
};

// Fills normalized_text for every utterance.
void NormalizeCollection(DialogueCollection &dialogues,
                         const NormalizationConfig &cfg = {});

// Removes utterances whose normalized text is empty and re-indexes
// positions. Returns the number removed. Requires normalized_text.
size_t DropEmpty(DialogueCollection &dialogues);

}  // namespace datag

#endif  // DATAG_PREPROCESS_H_
