#ifndef DATAG_SCHEMA_MAP_H_
#define DATAG_SCHEMA_MAP_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "datag/dialogue.h"
#include "datag/preprocess.h"
#include "datag/taxonomy.h"

namespace datag {

// (corpus, source pattern) -> taxonomy node, or DROP when target is empty.
// A pattern ending in '*' matches by prefix; anything else matches exactly.
struct MappingRule {
  Corpus corpus = Corpus::kCustom;
  std::string source_pattern;
  std::optional<std::string> target;
  std::string note;
  std::string locator;  // file:line it was loaded from

  bool IsPrefix() const {
    return !source_pattern.empty() && source_pattern.back() == '*';
  }
  bool Matches(std::string_view tag) const;
};

class RuleSet {
 public:
  // Loads every *.tsv file in `dir` (sorted by name).
  static RuleSet LoadDirectory(const std::string &dir, const Taxonomy &taxonomy);
  static RuleSet LoadFile(const std::string &path, const Taxonomy &taxonomy);
  // Validates targets against the taxonomy and rejects overlapping patterns.
  static RuleSet FromRules(std::vector<MappingRule> rules,
                           const Taxonomy &taxonomy);

  bool HasCorpus(Corpus corpus) const;
  // The unique rule matching `tag`, or nullptr.
  const MappingRule *Match(Corpus corpus, std::string_view tag) const;
  const std::vector<MappingRule> &rules() const { return rules_; }

 private:
  std::vector<MappingRule> rules_;
  std::map<Corpus, std::vector<size_t>> by_corpus_;
};

struct MapOutcome {
  // Set when at least one source tag mapped.
  std::optional<Utterance> mapped;
  std::string drop_reason;
  // Source tags with no matching rule.
  std::vector<std::string> unmatched_tags;
  // Source tags matched by an explicit DROP rule.
  std::vector<std::string> drop_rule_tags;

  bool dropped() const { return !mapped.has_value(); }
};

// Maps one utterance. SWDA tags are looked up on their modifier-stripped form
// first and then on their WS97-collapsed form (needs `collapser`). Throws
// ConfigError when the corpus has no rule table.
MapOutcome MapUtterance(const Utterance &u, Corpus corpus, const RuleSet &rules,
                        const Taxonomy &taxonomy,
                        const SwdaCollapser *collapser = nullptr);

struct CorpusDropStats {
  size_t ingested = 0;
  size_t retained = 0;
  size_t dropped = 0;
  // Tags of dropped utterances.
  std::map<std::string, size_t> dropped_tags;
  // Unmatched tags on utterances that were retained through another tag.
  std::map<std::string, size_t> ignored_tags;

  double RetainedPercent() const {
    return ingested == 0 ? 0.0 : 100.0 * static_cast<double>(retained) /
                                     static_cast<double>(ingested);
  }
};

struct DropReport {
  std::map<Corpus, CorpusDropStats> per_corpus;

  // Tab-separated: corpus, kind (dropped|ignored), tag, count; then summary
  // rows per corpus.
  std::string ToTsv() const;
};

// Applies MapUtterance to every utterance, removes dropped ones, re-indexes
// positions and records the original utterance count under
// metadata["ingested_utterances"] the first time a dialogue is mapped.
std::pair<DialogueCollection, DropReport> MapCorpus(
    const DialogueCollection &dialogues, const RuleSet &rules,
    const Taxonomy &taxonomy, const SwdaCollapser *collapser = nullptr);

}  // namespace datag

#endif  // DATAG_SCHEMA_MAP_H_
