#include <filesystem>
#include <fstream>

#include "datag/errors.h"
#include "datag/ingest.h"
#include "doctest.h"
#include "test_util.h"

namespace datag {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

void Write(const std::string &path, const std::string &text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

const char kSwdaHeader[] =
    "FILENAME:\t4325_1632_1519\nTOPIC#:\t\t323\n"
    "=========================================================================\n\n";

TEST_CASE("SWDA: three slash units pass through verbatim") {
  TempDir tmp;
  Write(tmp.file("sw_4325.utt"), std::string(kSwdaHeader) +
                                     "sd          A.1 utt1: Okay.  /\n"
                                     "qw          B.2 utt1: {D So } what do you think? /\n"
                                     "aa          A.3 utt1: Right. /\n");
  DialogueCollection ds = ReadSwda({tmp.file("sw_4325.utt")}, true);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].dialogue_id == "sw4325");
  REQUIRE(ds[0].utterances.size() == 3);
  CHECK(ds[0].utterances[0].source_tags[0].tag == "sd");
  CHECK(ds[0].utterances[1].source_tags[0].tag == "qw");
  CHECK(ds[0].utterances[2].source_tags[0].tag == "aa");
  CHECK(ds[0].utterances[1].raw_text == "{D So } what do you think? /");
  CHECK(ds[0].utterances[1].utterance_id == "B.2.utt1");
  CHECK(ds[0].utterances[1].speaker == "B");
  CHECK(ds[0].utterances[2].position == 2);
}

TEST_CASE("SWDA: '+' continuations merge in WS97 mode only") {
  TempDir tmp;
  Write(tmp.file("a.utt"), std::string(kSwdaHeader) +
                               "sd          A.1 utt1: I went to the -/\n"
                               "b           B.2 utt1: Uh-huh. /\n"
                               "+           A.3 utt1: store. /\n");
  DialogueCollection merged = ReadSwda({tmp.file("a.utt")}, true);
  REQUIRE(merged[0].utterances.size() == 2);
  CHECK(merged[0].utterances[0].raw_text == "I went to the -/ store. /");
  CHECK(merged[0].metadata.at("ws97_merged") == "1");
  DialogueCollection plain = ReadSwda({tmp.file("a.utt")}, false);
  CHECK(plain[0].utterances.size() == 3);
  CHECK(plain[0].utterances[2].source_tags[0].tag == "+");
}

TEST_CASE("SWDA: malformed input") {
  TempDir tmp;
  Write(tmp.file("nohdr.utt"), "sd A.1 utt1: hi /\n");
  CHECK_THROWS_AS(ReadSwda({tmp.file("nohdr.utt")}, true), ParseError);
  Write(tmp.file("bad.utt"), std::string(kSwdaHeader) + "this is not a unit\n");
  try {
    ReadSwda({tmp.file("bad.utt")}, true);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.locator() == tmp.file("bad.utt") + ":5");
  }
  CHECK_THROWS_AS(ReadSwda({tmp.file("missing.utt")}, true), IoError);
}

TEST_CASE("fixture corpora read with their manifests") {
  struct Expect {
    Corpus corpus;
    const char *first_dialogue;
    const char *first_utterance;
  };
  const Expect expects[] = {
      {Corpus::kSwda, "sw2001", "B.2.utt1"},
      {Corpus::kMapTask, "q1ec1", "q1ec1.g.move.1"},
      {Corpus::kAmi, "ES2002a", nullptr},
      {Corpus::kVerbMobil, "m001n", "A01.1"},
      {Corpus::kOasis, "oasis001", "u1.s1"},
      {Corpus::kDialogBank, "db01", "fs1"},
      {Corpus::kCapc, "capc-c001", "c001"},
      {Corpus::kSLogs, "s001", "t01"},
  };
  for (const auto &e : expects) {
    CAPTURE(CorpusName(e.corpus));
    CorpusManifest m = testing::FixtureManifest(e.corpus);
    DialogueCollection ds = ReadCorpus(m, testing::FixtureRoot(e.corpus));
    CHECK(static_cast<long>(ds.size()) == *m.expected_dialogues);
    CHECK(static_cast<long>(CountUtterances(ds)) == *m.expected_utterances);
    REQUIRE_FALSE(ds.empty());
    CHECK(ds[0].dialogue_id == e.first_dialogue);
    if (e.first_utterance) CHECK(ds[0].utterances[0].utterance_id == e.first_utterance);
    CheckCollection(ds);
    for (const auto &d : ds) {
      CHECK(d.corpus == e.corpus);
      for (const auto &u : d.utterances) {
        CHECK_FALSE(u.source_tags.empty());
        CHECK_FALSE(u.speaker.empty());
      }
    }
  }
}

TEST_CASE("NXT readers order units by start time across speakers") {
  DialogueCollection ds = ReadCorpus(testing::FixtureManifest(Corpus::kAmi),
                                     testing::FixtureRoot(Corpus::kAmi));
  std::set<std::string> speakers;
  for (const auto &u : ds[0].utterances) speakers.insert(u.speaker);
  CHECK(speakers.size() > 1);
  // Gloss from the ontology, not the type id.
  CHECK(ds[0].utterances[0].source_tags[0].scheme == "AMI");
  CHECK(ds[0].utterances[0].source_tags[0].tag.rfind("ami_da_", 0) == std::string::npos);
}

TEST_CASE("MapTask and AMI from inline files") {
  TempDir tmp;
  Write(tmp.file("moves/d1.g.moves.xml"),
        "<root><move id=\"m2\" start=\"2.0\" label=\"acknowledge\">"
        "<nite:child href=\"d1.g.timed-units.xml#id(t3)\"/></move>"
        "<move id=\"m1\" start=\"0.5\" label=\"instruct\">"
        "<nite:child href=\"d1.g.timed-units.xml#id(t1)..id(t2)\"/></move></root>");
  Write(tmp.file("moves/d1.f.moves.xml"),
        "<root><move id=\"f1\" start=\"1.0\" label=\"query_yn\">"
        "<nite:child href=\"d1.f.timed-units.xml#id(u1)\"/></move></root>");
  Write(tmp.file("timed-units/d1.g.timed-units.xml"),
        "<root><tu id=\"t1\">go</tu><sil id=\"s\"/><tu id=\"t2\">left</tu><tu id=\"t3\">okay</tu></root>");
  Write(tmp.file("timed-units/d1.f.timed-units.xml"), "<root><tu id=\"u1\">here</tu></root>");
  auto files = MatchFiles(tmp.path(), {"*.moves.xml"});
  REQUIRE(files.size() == 2);
  DialogueCollection ds = ReadMapTask(files);
  REQUIRE(ds.size() == 1);
  REQUIRE(ds[0].utterances.size() == 3);
  CHECK(ds[0].utterances[0].raw_text == "go left");
  CHECK(ds[0].utterances[1].raw_text == "here");
  CHECK(ds[0].utterances[1].speaker == "f");
  CHECK(ds[0].utterances[2].source_tags[0].tag == "acknowledge");

  Write(tmp.file("bad/d2.g.moves.xml"),
        "<root><move id=\"m1\" label=\"x\"><nite:child href=\"nowhere#id(t1)\"/></move></root>");
  CHECK_THROWS_AS(ReadMapTask({tmp.file("bad/d2.g.moves.xml")}), DataError);
  Write(tmp.file("bad2/d3.g.moves.xml"),
        "<root><move id=\"m1\" label=\"x\"><nite:child href=\"garbage\"/></move></root>");
  CHECK_THROWS_AS(ReadMapTask({tmp.file("bad2/d3.g.moves.xml")}), ParseError);

  Write(tmp.file("ami/acts/M1.A.dialog-act.xml"),
        "<root><dact id=\"a1\"><nite:pointer role=\"da-aspect\" href=\"da-types.xml#id(t9)\"/>"
        "<nite:child href=\"M1.A.words.xml#id(w0)..id(w1)\"/></dact></root>");
  Write(tmp.file("ami/words/M1.A.words.xml"),
        "<root><w id=\"w0\" starttime=\"0.1\">hi</w><w id=\"w1\" starttime=\"0.3\">all</w></root>");
  Write(tmp.file("ami/ontologies/da-types.xml"),
        "<root><da-type id=\"t1\" gloss=\"Inform\"><da-type id=\"t9\" gloss=\"Be-positive\"/></da-type></root>");
  DialogueCollection ami = ReadAmi({tmp.file("ami/acts/M1.A.dialog-act.xml")});
  REQUIRE(ami.size() == 1);
  CHECK(ami[0].utterances[0].raw_text == "hi all");
  CHECK(ami[0].utterances[0].source_tags[0].tag == "Be-positive");
}

TEST_CASE("VerbMobil segments") {
  TempDir tmp;
  Write(tmp.file("v.trl"),
        "# comment\nA01: hello @(GREET A) how about monday @(SUGGEST A)\n"
        "B02: fine @(ACCEPT B)\n");
  DialogueCollection ds = ReadVerbMobil({tmp.file("v.trl")});
  REQUIRE(ds[0].utterances.size() == 3);
  CHECK(ds[0].utterances[1].raw_text == "how about monday");
  CHECK(ds[0].utterances[1].utterance_id == "A01.2");
  CHECK(ds[0].utterances[2].source_tags[0].tag == "ACCEPT");
  Write(tmp.file("bad.trl"), "A01: hello @(GREET) trailing words\n");
  CHECK_THROWS_AS(ReadVerbMobil({tmp.file("bad.trl")}), ParseError);
}

TEST_CASE("Oasis and DialogBank inline") {
  TempDir tmp;
  Write(tmp.file("o.xml"),
        "<dialogue id=\"x1\"><u who=\"C\" n=\"1\"><s n=\"1\" sp-act=\"greet\">hello  there</s>"
        "<s n=\"2\" sp-act=\"q_wh\">what time</s></u></dialogue>");
  DialogueCollection o = ReadOasis({tmp.file("o.xml")});
  REQUIRE(o[0].utterances.size() == 2);
  CHECK(o[0].dialogue_id == "x1");
  CHECK(o[0].utterances[0].raw_text == "hello there");
  CHECK(o[0].utterances[1].utterance_id == "u1.s2");

  Write(tmp.file("d.diaml"),
        "<TEI><body><u><w xml:id=\"w1\">what</w><w xml:id=\"w2\">time</w>"
        "<w xml:id=\"w3\">okay</w></u></body><diaml>"
        "<fs xml:id=\"fs1\" target=\"#w1..#w2\"/><fs xml:id=\"fs2\" target=\"#w3\"/>"
        "<fs xml:id=\"fs3\" target=\"#w3\"/>"
        "<dialogueAct target=\"#fs1\" sender=\"#p1\" dimension=\"task\" communicativeFunction=\"setQuestion\"/>"
        "<dialogueAct target=\"#fs2\" sender=\"#p2\" dimension=\"autoFeedback\" communicativeFunction=\"positive\"/>"
        "<dialogueAct target=\"#fs2\" sender=\"#p2\" dimension=\"task\" communicativeFunction=\"inform\"/>"
        "</diaml></TEI>");
  DialogueCollection d = ReadDialogBank({tmp.file("d.diaml")});
  REQUIRE(d[0].utterances.size() == 2);
  CHECK(d[0].utterances[0].raw_text == "what time");
  CHECK(d[0].utterances[0].speaker == "p1");
  CHECK(d[0].utterances[1].source_tags.size() == 2);
  CHECK(d[0].metadata.at("unannotated_segments") == "1");
  Write(tmp.file("e.diaml"), "<TEI><fs xml:id=\"fs1\" target=\"#w9\"/></TEI>");
  CHECK_THROWS_AS(ReadDialogBank({tmp.file("e.diaml")}), ParseError);
}

TEST_CASE("turn-line files") {
  TempDir tmp;
  Write(tmp.file("s.tsv"), "t1\tuser\tTask:SetQ\twhat time\nt2\tsystem\tTask:Inform|Feedback\tnoon\n");
  DialogueCollection one = ReadTurnLines({tmp.file("s.tsv")}, Corpus::kSLogs, false);
  REQUIRE(one.size() == 1);
  CHECK(one[0].utterances[1].source_tags.size() == 2);
  DialogueCollection many = ReadTurnLines({tmp.file("s.tsv")}, Corpus::kCapc, true);
  REQUIRE(many.size() == 2);
  CHECK(many[1].dialogue_id == "s-t2");
  Write(tmp.file("bad.tsv"), "t1\tuser\tTask:SetQ\n");
  CHECK_THROWS_AS(ReadTurnLines({tmp.file("bad.tsv")}, Corpus::kSLogs, false), ParseError);
}

TEST_CASE("manifests and integrity checks") {
  TempDir tmp;
  CorpusManifest m = CorpusManifest::Default(Corpus::kSLogs);
  m.expected_dialogues = 0;
  CHECK(ReadCorpus(m, tmp.path()).empty());

  CorpusManifest fixture = testing::FixtureManifest(Corpus::kOasis);
  CorpusManifest round = CorpusManifest::FromJson(fixture.ToJson(), "rt");
  CHECK(round.file_globs == fixture.file_globs);
  CHECK(round.expected_utterances == fixture.expected_utterances);

  fixture.expected_utterances = *fixture.expected_utterances + 1;
  try {
    ReadCorpus(fixture, testing::FixtureRoot(Corpus::kOasis));
    FAIL("expected an integrity error");
  } catch (const IntegrityError &e) {
    CHECK(e.expected() == *fixture.expected_utterances);
    CHECK(e.found() == *fixture.expected_utterances - 1);
  }
  CHECK_THROWS_AS(CorpusManifest::FromJson("{\"corpus\": 3}", "m"), ParseError);
  CHECK_THROWS_AS(CorpusManifest::Load(tmp.file("none.json")), IoError);
}

TEST_CASE("splits") {
  CorpusManifest m = testing::FixtureManifest(Corpus::kSwda);
  DialogueCollection ds = ReadCorpus(m, testing::FixtureRoot(Corpus::kSwda));
  std::map<std::string, long> counts;
  for (const auto &d : ds) ++counts[d.metadata.at(kMetaSplit)];
  CHECK(counts == m.expected_splits);
  m.expected_splits["train"] += 1;
  CHECK_THROWS_AS(ReadCorpus(m, testing::FixtureRoot(Corpus::kSwda)), IntegrityError);

  TempDir tmp;
  Write(tmp.file("splits.tsv"), "sw2001 train\n");
  CHECK_THROWS_AS(ApplySplits(ds, tmp.file("splits.tsv")), ParseError);
}

TEST_CASE("glob matching crosses directories and sorts") {
  TempDir tmp;
  Write(tmp.file("b/x.utt"), "");
  Write(tmp.file("a/y.utt"), "");
  Write(tmp.file("a/z.txt"), "");
  auto files = MatchFiles(tmp.path(), {"*.utt"});
  REQUIRE(files.size() == 2);
  CHECK(fs::path(files[0]).filename() == "y.utt");
  CHECK(MatchFiles(tmp.path(), {"b/*.utt"}).size() == 1);
}

TEST_CASE("corpus stats") {
  DialogueCollection raw = ReadCorpus(testing::FixtureManifest(Corpus::kMapTask),
                                      testing::FixtureRoot(Corpus::kMapTask));
  auto [mapped, report] =
      MapCorpus(raw, testing::SharedRules(), testing::SharedTaxonomy());
  StatReport r = CorpusStats(mapped, Level::kDimension, testing::SharedTaxonomy());
  size_t sum = 0;
  for (const auto &row : r.rows) sum += row.count;
  CHECK(sum == r.total);
  CHECK(r.corpus_utterances == CountUtterances(raw));
  CHECK(r.coverage_percent == doctest::Approx(100.0 * r.covered_utterances / r.corpus_utterances));
  StatReport som = CorpusStats(mapped, Level::kSomFunction, testing::SharedTaxonomy());
  CHECK(som.total == 0);
  CHECK(r.ToTsv().rfind("category\tcount\tpercent\n", 0) == 0);
}

}  // namespace
}  // namespace datag
