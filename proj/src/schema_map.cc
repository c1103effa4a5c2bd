#include "datag/schema_map.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "datag/errors.h"

namespace datag {

namespace fs = std::filesystem;

namespace {

bool Overlaps(const MappingRule &a, const MappingRule &b) {
  std::string_view pa = a.source_pattern;
  std::string_view pb = b.source_pattern;
  if (a.IsPrefix()) pa.remove_suffix(1);
  if (b.IsPrefix()) pb.remove_suffix(1);
  if (!a.IsPrefix() && !b.IsPrefix()) return pa == pb;
  if (a.IsPrefix() && !b.IsPrefix()) return pb.starts_with(pa);
  if (!a.IsPrefix() && b.IsPrefix()) return pa.starts_with(pb);
  return pa.starts_with(pb) || pb.starts_with(pa);
}

std::vector<MappingRule> ParseRules(std::istream &in, const std::string &name) {
  std::vector<MappingRule> rules;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    std::string loc = name + ":" + std::to_string(lineno);
    if (fields.size() < 3) {
      throw ParseError(loc, "expected corpus<TAB>source_pattern<TAB>target");
    }
    MappingRule r;
    try {
      r.corpus = ParseCorpus(fields[0]);
    } catch (const UsageError &e) {
      throw ParseError(loc, e.what());
    }
    r.source_pattern = fields[1];
    if (fields[2] != "DROP") r.target = fields[2];
    if (fields.size() > 3) r.note = fields[3];
    r.locator = loc;
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<std::string> LookupKeys(Corpus corpus, std::string_view tag,
                                    const SwdaCollapser *collapser) {
  if (corpus != Corpus::kSwda) return {std::string(tag)};
  std::vector<std::string> keys = {SwdaBaseTag(tag)};
  if (collapser != nullptr && collapser->Covers(tag)) {
    std::string collapsed = collapser->Collapse(tag);
    if (collapsed != keys.front()) keys.push_back(std::move(collapsed));
  }
  return keys;
}

}  // namespace

bool MappingRule::Matches(std::string_view tag) const {
  if (IsPrefix()) {
    return tag.starts_with(
        std::string_view(source_pattern).substr(0, source_pattern.size() - 1));
  }
  return tag == source_pattern;
}

RuleSet RuleSet::LoadFile(const std::string &path, const Taxonomy &taxonomy) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open rule table");
  return FromRules(ParseRules(in, path), taxonomy);
}

RuleSet RuleSet::LoadDirectory(const std::string &dir, const Taxonomy &taxonomy) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir, "not a rule directory");
  std::vector<std::string> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<MappingRule> all;
  for (const auto &f : files) {
    std::ifstream in(f);
    if (!in) throw IoError(f, "cannot open rule table");
    auto rules = ParseRules(in, f);
    all.insert(all.end(), rules.begin(), rules.end());
  }
  return FromRules(std::move(all), taxonomy);
}

RuleSet RuleSet::FromRules(std::vector<MappingRule> rules,
                           const Taxonomy &taxonomy) {
  RuleSet set;
  for (size_t i = 0; i < rules.size(); ++i) {
    const MappingRule &r = rules[i];
    if (r.source_pattern.empty() || r.source_pattern == "*") {
      throw ValidationError(r.locator + ": empty source pattern");
    }
    if (r.target && !taxonomy.Contains(*r.target)) {
      throw ValidationError(r.locator + ": target '" + *r.target +
                            "' is not a taxonomy node");
    }
    for (size_t j : set.by_corpus_[r.corpus]) {
      if (Overlaps(rules[j], r)) {
        throw ValidationError(r.locator + ": pattern '" + r.source_pattern +
                              "' overlaps '" + rules[j].source_pattern +
                              "' at " + rules[j].locator);
      }
    }
    set.by_corpus_[r.corpus].push_back(i);
  }
  set.rules_ = std::move(rules);
  return set;
}

bool RuleSet::HasCorpus(Corpus corpus) const {
  return by_corpus_.count(corpus) > 0;
}

const MappingRule *RuleSet::Match(Corpus corpus, std::string_view tag) const {
  auto it = by_corpus_.find(corpus);
  if (it == by_corpus_.end()) return nullptr;
  for (size_t i : it->second) {
    if (rules_[i].Matches(tag)) return &rules_[i];
  }
  return nullptr;
}

MapOutcome MapUtterance(const Utterance &u, Corpus corpus, const RuleSet &rules,
                        const Taxonomy &taxonomy,
                        const SwdaCollapser *collapser) {
  if (!rules.HasCorpus(corpus)) {
    throw ConfigError("no mapping rules for corpus " +
                      std::string(CorpusName(corpus)));
  }
  MapOutcome out;
  std::vector<DATag> tags;
  for (const auto &st : u.source_tags) {
    const MappingRule *rule = nullptr;
    for (const auto &key : LookupKeys(corpus, st.tag, collapser)) {
      rule = rules.Match(corpus, key);
      if (rule != nullptr) break;
    }
    if (rule == nullptr) {
      out.unmatched_tags.push_back(st.tag);
      continue;
    }
    if (!rule->target) {
      out.drop_rule_tags.push_back(st.tag);
      continue;
    }
    DATag tag{taxonomy.Get(*rule->target).dimension, *rule->target};
    // Two source tags may land on the same node; keep one.
    if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
      tags.push_back(std::move(tag));
    }
  }
  if (tags.empty()) {
    if (u.source_tags.empty()) {
      out.drop_reason = "no source tags";
    } else if (!out.unmatched_tags.empty()) {
      out.drop_reason = "no rule for tag '" + out.unmatched_tags.front() + "'";
    } else {
      out.drop_reason = "DROP rule for tag '" + out.drop_rule_tags.front() + "'";
    }
    return out;
  }
  Utterance mapped = u;
  mapped.mapped_tags = std::move(tags);
  out.mapped = std::move(mapped);
  return out;
}

std::string DropReport::ToTsv() const {
  std::ostringstream out;
  out << "corpus\tkind\ttag\tcount\n";
  for (const auto &[corpus, s] : per_corpus) {
    for (const auto &[tag, n] : s.dropped_tags) {
      out << CorpusName(corpus) << "\tdropped\t" << tag << '\t' << n << '\n';
    }
    for (const auto &[tag, n] : s.ignored_tags) {
      out << CorpusName(corpus) << "\tignored\t" << tag << '\t' << n << '\n';
    }
  }
  out << "corpus\tingested\tretained\tdropped\tretained_percent\n";
  for (const auto &[corpus, s] : per_corpus) {
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.2f", s.RetainedPercent());
    out << CorpusName(corpus) << '\t' << s.ingested << '\t' << s.retained << '\t'
        << s.dropped << '\t' << pct << '\n';
  }
  return out.str();
}

std::pair<DialogueCollection, DropReport> MapCorpus(
    const DialogueCollection &dialogues, const RuleSet &rules,
    const Taxonomy &taxonomy, const SwdaCollapser *collapser) {
  for (const auto &d : dialogues) {
    if (!rules.HasCorpus(d.corpus)) {
      throw ConfigError("no mapping rules for corpus " +
                        std::string(CorpusName(d.corpus)));
    }
  }
  std::vector<std::vector<MapOutcome>> outcomes(dialogues.size());
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < dialogues.size(); ++i) {
    const auto &d = dialogues[i];
    outcomes[i].reserve(d.utterances.size());
    for (const auto &u : d.utterances) {
      outcomes[i].push_back(MapUtterance(u, d.corpus, rules, taxonomy, collapser));
    }
  }

  DialogueCollection mapped;
  mapped.reserve(dialogues.size());
  DropReport report;
  for (size_t i = 0; i < dialogues.size(); ++i) {
    const auto &d = dialogues[i];
    CorpusDropStats &stats = report.per_corpus[d.corpus];
    UnifiedDialogue out;
    out.dialogue_id = d.dialogue_id;
    out.corpus = d.corpus;
    out.metadata = d.metadata;
    if (!out.metadata.count(kMetaIngested)) {
      out.metadata[kMetaIngested] = std::to_string(d.utterances.size());
    }
    for (auto &o : outcomes[i]) {
      ++stats.ingested;
      if (o.dropped()) {
        ++stats.dropped;
        for (const auto &t : o.unmatched_tags) ++stats.dropped_tags[t];
        for (const auto &t : o.drop_rule_tags) ++stats.dropped_tags[t];
        continue;
      }
      ++stats.retained;
      for (const auto &t : o.unmatched_tags) ++stats.ignored_tags[t];
      for (const auto &t : o.drop_rule_tags) ++stats.ignored_tags[t];
      Utterance u = std::move(*o.mapped);
      u.position = static_cast<int>(out.utterances.size());
      out.utterances.push_back(std::move(u));
    }
    mapped.push_back(std::move(out));
  }
  return {std::move(mapped), std::move(report)};
}

}  // namespace datag
