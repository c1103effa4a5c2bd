#include <fstream>
#include <random>
#include <sstream>

#include "datag/errors.h"
#include "datag/preprocess.h"
#include "doctest.h"
#include "oracles.h"
#include "test_util.h"

namespace datag {
namespace {

TEST_CASE("normalization examples") {
  CHECK(Normalize("Let's GO to Rome!") == "let's go to rome");
  CHECK(Normalize("I can't do that.") == "I can't do that");
  CHECK(Normalize("WOW -- {F uh} amazing <<laughter>>") == "wow uh amazing");
}

// Hand-built list of SWDA transcription conventions.
TEST_CASE("SWDA markup cases") {
  struct Case {
    const char *in;
    const char *out;
  };
  const Case cases[] = {
      {"{D Well, } I think so. /", "well I think so"},
      {"[ I, + I ] really do. /", "I I really do"},
      {"{C And } {F um, } we went. /", "and um we went"},
      {"<Laughter>. /", ""},
      {"<<talking to child>> okay -/", "okay"},
      {"# you know # /", "you know"},
      {"it's a, -- a big one /", "it's a a big one"},
      {"{E I mean } the car. /", "I mean the car"},
      {"'cause it's ten o'clock", "cause it's ten o'clock"},
      {"rock 'n' roll", "rock n roll"},
      {"I'm sure I'll go", "i'm sure i'll go"},
      {"Call 911 NOW", "call 911 now"},
      {"caf\xc3\xa9 au lait", "caf au lait"},
      {"???", ""},
      {"  spaced\tout\n text ", "spaced out text"},
  };
  for (const auto &c : cases) {
    CAPTURE(c.in);
    CHECK(Normalize(c.in) == c.out);
  }
}

TEST_CASE("normalization switches") {
  NormalizationConfig cfg;
  cfg.lowercase = false;
  CHECK(Normalize("Let's GO", cfg) == "Let's GO");
  cfg = {};
  cfg.preserve_I = false;
  CHECK(Normalize("I can", cfg) == "i can");
  cfg = {};
  cfg.keep_apostrophes = false;
  CHECK(Normalize("can't", cfg) == "can t");
}

TEST_CASE("normalization is idempotent with a closed output alphabet") {
  std::mt19937_64 rng(424242);
  for (int i = 0; i < 10000; ++i) {
    const std::string s = oracles::RandomTranscript(rng);
    CAPTURE(s);
    const std::string once = Normalize(s);
    CHECK(Normalize(once) == once);
    CHECK(oracles::InNormalizedAlphabet(once));
  }
}

TEST_CASE("the alphabet checker") {
  CHECK(oracles::InNormalizedAlphabet("i can't see 42 things I said"));
  CHECK(oracles::InNormalizedAlphabet(""));
  CHECK_FALSE(oracles::InNormalizedAlphabet("Hello"));
  CHECK_FALSE(oracles::InNormalizedAlphabet("a  b"));
  CHECK_FALSE(oracles::InNormalizedAlphabet(" a"));
  CHECK_FALSE(oracles::InNormalizedAlphabet("'tis"));
  CHECK_FALSE(oracles::InNormalizedAlphabet("a-b"));
  CHECK_FALSE(oracles::InNormalizedAlphabet("caf\xc3\xa9"));
}

TEST_CASE("SWDA base tags") {
  CHECK(SwdaBaseTag("sd") == "sd");
  CHECK(SwdaBaseTag("sd^e") == "sd");
  CHECK(SwdaBaseTag("qy^d") == "qy^d");
  CHECK(SwdaBaseTag("qw^d") == "qw^d");
  CHECK(SwdaBaseTag("b^m") == "b^m");
  CHECK(SwdaBaseTag("nn^e") == "ng");
  CHECK(SwdaBaseTag("ny^e") == "na");
  CHECK(SwdaBaseTag("sd(^q)") == "sd");
  CHECK(SwdaBaseTag("^q") == "^q");
  CHECK(SwdaBaseTag("qy,sd") == "qy");
  CHECK(SwdaBaseTag("aa@") == "aa");
  CHECK(SwdaBaseTag("sv*") == "sv");
}

TEST_CASE("WS97 collapse") {
  const SwdaCollapser &c = testing::SharedCollapser();
  CHECK(c.Collapse("qy^d") == "qy^d");
  CHECK(c.Collapse("sd") == "sd");
  CHECK(c.Collapse("fo_o_fw_\"_by_bc") == "fo_o_fw_by_bc");
  CHECK(c.Collapse("sd^e") == "sd");
  CHECK(c.Collapse("qr") == "qy");
  CHECK(c.Collapse("oo") == "oo_co_cc");
  CHECK(c.Image().size() == 42);
  CHECK_FALSE(c.Covers("zz"));
  try {
    c.Collapse("zz");
    FAIL("expected an error");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("collapse table parsing") {
  testing::TempDir tmp;
  {
    std::ofstream out(tmp.file("t.tsv"));
    out << "# comment\nsd\tsd\nqr\tqy\n";
  }
  SwdaCollapser c = SwdaCollapser::Load(tmp.file("t.tsv"));
  CHECK(c.Collapse("qr") == "qy");
  CHECK(c.Image() == std::set<std::string>{"sd", "qy"});
  CHECK_THROWS_AS(SwdaCollapser::Load(tmp.file("missing.tsv")), IoError);
}

UnifiedDialogue ThreeUtterances(const char *a, const char *b, const char *c) {
  UnifiedDialogue d;
  d.dialogue_id = "d";
  int pos = 0;
  for (const char *t : {a, b, c}) {
    Utterance u;
    u.utterance_id = "u" + std::to_string(pos);
    u.position = pos++;
    u.raw_text = t;
    d.utterances.push_back(u);
  }
  return d;
}

TEST_CASE("dropping empty utterances") {
  DialogueCollection ds = {ThreeUtterances("???", "hello there", "Yes.")};
  NormalizeCollection(ds);
  CHECK(DropEmpty(ds) == 1);
  REQUIRE(ds[0].utterances.size() == 2);
  CHECK(ds[0].utterances[0].position == 0);
  CHECK(ds[0].utterances[1].position == 1);
  CHECK(ds[0].utterances[0].utterance_id == "u1");

  DialogueCollection full = {ThreeUtterances("a", "b", "c")};
  NormalizeCollection(full);
  CHECK(DropEmpty(full) == 0);
  CHECK(full[0].utterances.size() == 3);
}

TEST_CASE("DropEmpty requires normalized text") {
  DialogueCollection ds = {ThreeUtterances("a", "b", "c")};
  CHECK_THROWS_AS(DropEmpty(ds), UsageError);
}

}  // namespace
}  // namespace datag
