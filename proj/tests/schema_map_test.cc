#include <fstream>
#include <sstream>

#include "datag/errors.h"
#include "datag/schema_map.h"
#include "doctest.h"
#include "test_util.h"

namespace datag {
namespace {

using testing::SharedCollapser;
using testing::SharedRules;
using testing::SharedTaxonomy;

Utterance Tagged(const std::string &scheme, const std::vector<std::string> &tags) {
  Utterance u;
  u.utterance_id = "u1";
  u.raw_text = "text";
  for (const auto &t : tags) u.source_tags.push_back({scheme, t});
  return u;
}

std::vector<DATag> MapOne(Corpus c, const std::vector<std::string> &tags) {
  MapOutcome o = MapUtterance(Tagged("x", tags), c, SharedRules(), SharedTaxonomy(),
                              &SharedCollapser());
  if (o.dropped()) return {};
  return *o.mapped->mapped_tags;
}

TEST_CASE("spot rules") {
  CHECK(MapOne(Corpus::kSwda, {"qw"}) == std::vector<DATag>{{Dimension::kTask, "SetQ"}});
  CHECK(MapOne(Corpus::kMapTask, {"query_yn"}) ==
        std::vector<DATag>{{Dimension::kTask, "PropQ"}});
  CHECK(MapOne(Corpus::kOasis, {"thank"}) ==
        std::vector<DATag>{{Dimension::kSom, "Thanking"}});
  CHECK(MapOne(Corpus::kAmi, {"Elicit-inform"}) ==
        std::vector<DATag>{{Dimension::kTask, "Question"}});
  CHECK(MapOne(Corpus::kSwda, {"qy^d"}) == std::vector<DATag>{{Dimension::kTask, "PropQ"}});
  CHECK(MapOne(Corpus::kSwda, {"sd^e"}) == std::vector<DATag>{{Dimension::kTask, "Inform"}});
  // Open option vs its WS97 bucket mate: looked up before collapsing.
  CHECK(MapOne(Corpus::kSwda, {"oo"}) == std::vector<DATag>{{Dimension::kTask, "Directive"}});
  CHECK(MapOne(Corpus::kSwda, {"cc"}) == std::vector<DATag>{{Dimension::kTask, "Commissive"}});
  CHECK(MapOne(Corpus::kVerbMobil, {"REQUEST_SUGGEST"}) ==
        std::vector<DATag>{{Dimension::kTask, "Directive"}});
  CHECK(MapOne(Corpus::kDialogBank, {"autoFeedback:positive"}) ==
        std::vector<DATag>{{Dimension::kFeedback, "Feedback"}});
  CHECK(MapOne(Corpus::kCapc, {"SOM:Apology"}) ==
        std::vector<DATag>{{Dimension::kSom, "Apology"}});
  CHECK(MapOne(Corpus::kSwda, {"aa"}).empty());
  CHECK(MapOne(Corpus::kSwda, {"%"}).empty());
}

TEST_CASE("multiple tags and ignored tags") {
  MapOutcome o = MapUtterance(
      Tagged("DiAML", {"task:inform", "turnManagement:turnTake", "autoFeedback:positive"}),
      Corpus::kDialogBank, SharedRules(), SharedTaxonomy());
  REQUIRE_FALSE(o.dropped());
  CHECK(*o.mapped->mapped_tags == std::vector<DATag>{{Dimension::kTask, "Inform"},
                                                    {Dimension::kFeedback, "Feedback"}});
  CHECK(o.unmatched_tags == std::vector<std::string>{"turnManagement:turnTake"});

  MapOutcome d = MapUtterance(Tagged("DiAML", {"turnManagement:turnTake"}),
                              Corpus::kDialogBank, SharedRules(), SharedTaxonomy());
  CHECK(d.dropped());
  CHECK_FALSE(d.drop_reason.empty());
}

TEST_CASE("explicit DROP rules and missing tables") {
  std::vector<MappingRule> rules(2);
  rules[0].corpus = Corpus::kOasis;
  rules[0].source_pattern = "inform";
  rules[0].target = "Inform";
  rules[1].corpus = Corpus::kOasis;
  rules[1].source_pattern = "other";
  RuleSet set = RuleSet::FromRules(rules, SharedTaxonomy());
  MapOutcome o = MapUtterance(Tagged("SPAAC", {"other"}), Corpus::kOasis, set, SharedTaxonomy());
  CHECK(o.dropped());
  CHECK(o.drop_rule_tags == std::vector<std::string>{"other"});
  CHECK_THROWS_AS(MapUtterance(Tagged("x", {"sd"}), Corpus::kSwda, set, SharedTaxonomy()),
                  ConfigError);
}

TEST_CASE("rule validation") {
  auto make = [](std::string pattern, std::optional<std::string> target) {
    MappingRule r;
    r.corpus = Corpus::kVerbMobil;
    r.source_pattern = std::move(pattern);
    r.target = std::move(target);
    r.locator = "t:1";
    return r;
  };
  CHECK_THROWS_AS(RuleSet::FromRules({make("A", "NotANode")}, SharedTaxonomy()), ValidationError);
  CHECK_THROWS_AS(RuleSet::FromRules({make("REQ*", "Directive"), make("REQUEST", "Inform")},
                                     SharedTaxonomy()),
                  ValidationError);
  CHECK_THROWS_AS(RuleSet::FromRules({make("A", "Inform"), make("A", "Inform")},
                                     SharedTaxonomy()),
                  ValidationError);
  CHECK_THROWS_AS(RuleSet::FromRules({make("*", "Inform")}, SharedTaxonomy()), ValidationError);
  CHECK_NOTHROW(RuleSet::FromRules({make("REQ*", "Directive"), make("INFORM", "Inform")},
                                   SharedTaxonomy()));
  MappingRule prefix = make("FEEDBACK*", "Feedback");
  CHECK(prefix.Matches("FEEDBACK_POSITIVE"));
  CHECK_FALSE(prefix.Matches("FEED"));
}

TEST_CASE("rule files parse with locators") {
  testing::TempDir tmp;
  {
    std::ofstream out(tmp.file("r.tsv"));
    out << "# header\nOASIS\tinform\tInform\tnote\nOASIS\tjunk\tDROP\n";
  }
  RuleSet r = RuleSet::LoadFile(tmp.file("r.tsv"), SharedTaxonomy());
  REQUIRE(r.rules().size() == 2);
  CHECK(r.rules()[0].locator == tmp.file("r.tsv") + ":2");
  CHECK_FALSE(r.rules()[1].target.has_value());
  {
    std::ofstream out(tmp.file("bad.tsv"));
    out << "OASIS\tinform\n";
  }
  CHECK_THROWS_AS(RuleSet::LoadFile(tmp.file("bad.tsv"), SharedTaxonomy()), ParseError);
  CHECK_THROWS_AS(RuleSet::LoadFile(tmp.file("none.tsv"), SharedTaxonomy()), IoError);
}

// Oracle counts written by the fixture generator from its own knowledge of
// which tags it emitted.
std::map<std::string, std::map<std::string, long>> OracleCounts() {
  std::ifstream in(testing::FixtureDir() + "/mapped_counts.tsv");
  std::map<std::string, std::map<std::string, long>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string corpus, key;
    long n;
    ss >> corpus >> key >> n;
    out[corpus][key] = n;
  }
  return out;
}

TEST_CASE("mapping integrity on every fixture corpus") {
  auto oracle = OracleCounts();
  REQUIRE(oracle.size() == 8);
  for (Corpus c : AllCorpora()) {
    if (c == Corpus::kCustom) continue;
    const std::string name(CorpusName(c));
    CAPTURE(name);
    DialogueCollection raw = ReadCorpus(testing::FixtureManifest(c), testing::FixtureRoot(c));
    auto [mapped, report] = MapCorpus(raw, SharedRules(), SharedTaxonomy(), &SharedCollapser());
    const CorpusDropStats &s = report.per_corpus.at(c);
    CHECK(s.retained + s.dropped == s.ingested);
    CHECK(s.ingested == CountUtterances(raw));
    CHECK(s.retained == CountUtterances(mapped));
    const auto &o = oracle.at(name);
    CHECK(static_cast<long>(s.ingested) == o.at("ingested"));
    CHECK(static_cast<long>(s.retained) == o.at("retained"));
    CHECK(static_cast<long>(s.dropped) == o.at("dropped"));

    StatReport dims = CorpusStats(mapped, Level::kDimension, SharedTaxonomy());
    for (const auto &row : dims.rows) {
      CAPTURE(row.category);
      CHECK(static_cast<long>(row.count) == o.at(row.category));
    }
    for (Level level : {Level::kTaskFunction, Level::kSomFunction}) {
      StatReport f = CorpusStats(mapped, level, SharedTaxonomy());
      for (const auto &row : f.rows) {
        CAPTURE(row.category);
        CHECK(static_cast<long>(row.count) == o.at(row.category));
      }
    }
    // Positions are re-indexed and the original size is recorded.
    for (const auto &d : mapped) {
      for (size_t i = 0; i < d.utterances.size(); ++i) {
        CHECK(d.utterances[i].position == static_cast<int>(i));
      }
      CHECK(d.metadata.count(kMetaIngested) == 1);
    }
  }
}

TEST_CASE("drop report lists dropped and ignored tags") {
  DialogueCollection raw =
      ReadCorpus(testing::FixtureManifest(Corpus::kSwda), testing::FixtureRoot(Corpus::kSwda));
  auto [mapped, report] = MapCorpus(raw, SharedRules(), SharedTaxonomy(), &SharedCollapser());
  const auto &s = report.per_corpus.at(Corpus::kSwda);
  CHECK(s.dropped_tags.count("aa") == 1);
  CHECK(s.dropped_tags.count("x") == 1);
  std::string tsv = report.ToTsv();
  CHECK(tsv.find("SWDA\tdropped\taa\t") != std::string::npos);
}

TEST_CASE("stats require mapped input") {
  DialogueCollection raw = ReadCorpus(testing::FixtureManifest(Corpus::kOasis),
                                      testing::FixtureRoot(Corpus::kOasis));
  CHECK_THROWS_AS(CorpusStats(raw, Level::kDimension, SharedTaxonomy()), UsageError);
}

}  // namespace
}  // namespace datag
