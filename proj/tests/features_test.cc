#include <algorithm>
#include <fstream>
#include <sstream>

#include "datag/errors.h"
#include "datag/features.h"
#include "datag/preprocess.h"
#include "doctest.h"
#include "test_util.h"

namespace datag {
namespace {

Utterance Text(const std::string &text) {
  Utterance u;
  u.utterance_id = "u1";
  u.raw_text = text;
  u.normalized_text = text;
  return u;
}

std::vector<TokenAnnotation> Tokens(const std::vector<std::pair<std::string, std::string>> &pos_dep) {
  std::vector<TokenAnnotation> out;
  for (size_t i = 0; i < pos_dep.size(); ++i) {
    out.push_back({static_cast<int>(i), "w" + std::to_string(i), pos_dep[i].first,
                   pos_dep[i].second, i == 0 ? kRootHead : 0});
  }
  return out;
}

std::vector<std::string> Sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST_CASE("feature spec names round trip") {
  for (const char *spec : {"1-grams", "1-2-grams", "1-2-3-grams", "1-2-grams+PREV",
                           "1-2-grams+PREV+I-POS", "1-2-grams+PREV+I-POS+I-DEP",
                           "1-2-grams+PREV+I-POS+WE", "1-2-grams+POS+DEP"}) {
    CAPTURE(spec);
    CHECK(FeatureConfig::Parse(spec).Name() == spec);
  }
  FeatureConfig c = FeatureConfig::Parse("1-2-grams+PREV+I-POS");
  CHECK(c.use_unigrams);
  CHECK(c.use_bigrams);
  CHECK_FALSE(c.use_trigrams);
  CHECK(c.use_prev_da);
  CHECK(c.use_ipos);
  CHECK(c.NeedsTokens());
  CHECK_THROWS_AS(FeatureConfig::Parse("1-grams+LEX"), UsageError);
  CHECK_THROWS_AS(FeatureConfig::Parse("1-4-grams"), UsageError);
  CHECK_THROWS_AS(FeatureConfig::Parse(""), UsageError);
}

TEST_CASE("n-gram and context features") {
  Utterance u = Text("okay thanks");
  CHECK(Sorted(SparseFeatureNames(u, "", FeatureConfig::Parse("1-grams"))) ==
        std::vector<std::string>{"okay", "thanks"});
  CHECK(Sorted(SparseFeatureNames(u, "", FeatureConfig::Parse("1-2-grams"))) ==
        Sorted({"okay", "thanks", "<s> okay", "okay thanks", "thanks </s>"}));
  auto tri = SparseFeatureNames(u, "", FeatureConfig::Parse("1-2-3-grams"));
  CHECK(std::count(tri.begin(), tri.end(), "<s> okay thanks") == 1);
  CHECK(std::count(tri.begin(), tri.end(), "okay thanks </s>") == 1);
  CHECK(tri.size() == 2 + 3 + 2);

  FeatureConfig prev = FeatureConfig::Parse("1-grams+PREV");
  auto first = SparseFeatureNames(u, "", prev);
  CHECK(std::count(first.begin(), first.end(), std::string("PREV=") + kNoPrevTag) == 1);
  auto later = SparseFeatureNames(u, "SetQ", prev);
  CHECK(std::count(later.begin(), later.end(), "PREV=SetQ") == 1);
}

TEST_CASE("indexed syntactic features") {
  Utterance u = Text("close the window");
  u.tokens = Tokens({{"VB", "root"}, {"DT", "det"}, {"NN", "obj"}});
  CHECK(Sorted(SparseFeatureNames(u, "", FeatureConfig::Parse("1-grams+I-POS"))) ==
        Sorted({"close", "the", "window", "POS@0=VB", "POS@1=DT", "POS@2=NN"}));
  auto dep = SparseFeatureNames(u, "", FeatureConfig::Parse("1-grams+DEP+I-DEP"));
  CHECK(std::count(dep.begin(), dep.end(), "DEP=obj") == 1);
  CHECK(std::count(dep.begin(), dep.end(), "DEP@1=det") == 1);

  // Failed alignment: the families are silently empty.
  u.tokens = std::vector<TokenAnnotation>{};
  CHECK(SparseFeatureNames(u, "", FeatureConfig::Parse("1-grams+I-POS")).size() == 3);
  // No sidecar at all is a configuration error.
  u.tokens.reset();
  CHECK_THROWS_AS(SparseFeatureNames(u, "", FeatureConfig::Parse("1-grams+I-POS")),
                  ConfigError);
  CHECK_NOTHROW(SparseFeatureNames(u, "", FeatureConfig::Parse("1-2-grams+PREV")));
  u.normalized_text.reset();
  CHECK_THROWS_AS(SparseFeatureNames(u, "", FeatureConfig::Parse("1-grams")), UsageError);
}

TEST_CASE("vectors are sorted binary indicators") {
  Vocabulary vocab;
  FeatureConfig cfg = FeatureConfig::Parse("1-2-grams");
  FeatureVector a = Extract(Text("yes yes yes"), "", cfg, vocab, nullptr);
  // yes, <s> yes, yes yes, yes </s>: repeats collapse.
  CHECK(a.sparse.size() == 4);
  for (size_t i = 0; i < a.sparse.size(); ++i) {
    CHECK(a.sparse[i].second == 1.0);
    if (i > 0) CHECK(a.sparse[i - 1].first < a.sparse[i].first);
  }
  CHECK(a.dense.empty());
  const int before = vocab.size();
  vocab.Freeze();
  FeatureVector b = Extract(Text("yes no"), "", cfg, vocab, nullptr);
  CHECK(vocab.size() == before);
  CHECK(b.sparse.size() == 2);  // "yes" and "<s> yes"
  CHECK(vocab.Intern("never-seen") == -1);
  CHECK(ExtractFrozen(Text("yes no"), "", cfg, vocab, nullptr) == b);

  Vocabulary open;
  CHECK_THROWS_AS(ExtractFrozen(Text("x"), "", cfg, open, nullptr), UsageError);
}

TEST_CASE("vocabulary save and load") {
  Vocabulary v;
  for (const char *n : {"okay", "PREV=SetQ", "POS@0=VB", "a b"}) v.Intern(n);
  std::stringstream ss;
  v.Save(ss);
  Vocabulary back = Vocabulary::Load(ss, "mem");
  CHECK(back.frozen());
  REQUIRE(back.size() == v.size());
  for (int i = 0; i < v.size(); ++i) CHECK(back.Name(i) == v.Name(i));
  std::istringstream gap("a\t0\nb\t2\n");
  CHECK_THROWS_AS(Vocabulary::Load(gap, "gap"), ParseError);
  std::istringstream dup("a\t0\na\t1\n");
  CHECK_THROWS_AS(Vocabulary::Load(dup, "dup"), ParseError);
}

TEST_CASE("embedding table") {
  std::istringstream two("hello 1 2 3\nworld 4 5 6\n");
  EmbeddingTable t = EmbeddingTable::Parse(two, "e", 3);
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  REQUIRE(t.Find("World") != nullptr);
  CHECK((*t.Find("World"))[2] == 6.0f);
  CHECK(t.Find("nope") == nullptr);

  std::istringstream header("2 3\nhello 1 2 3\nworld 4 5 6\n");
  CHECK(EmbeddingTable::Parse(header, "h", 3).size() == 2);

  std::istringstream bad("hello 1 2 3\nworld 4 5\n");
  try {
    EmbeddingTable::Parse(bad, "bad.txt", 3);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.locator() == "bad.txt:2");
  }
  std::istringstream nan("hello 1 x 3\n");
  CHECK_THROWS_AS(EmbeddingTable::Parse(nan, "n", 3), ParseError);
  CHECK_THROWS_AS(EmbeddingTable::Load("/nonexistent/emb.txt", 3), IoError);
  CHECK_THROWS_AS(t.Add("z", {1.0f}), DimensionError);
}

TEST_CASE("embedding block is the mean over known tokens") {
  EmbeddingTable t(2);
  t.Add("a", {1.0f, 0.0f});
  t.Add("b", {0.0f, 1.0f});
  FeatureConfig cfg = FeatureConfig::Parse("1-grams+WE");
  cfg.embedding_dim = 2;
  Vocabulary v;
  FeatureVector fv = Extract(Text("a b"), "", cfg, v, &t);
  CHECK(fv.dense == std::vector<double>{0.5, 0.5});
  // Unknown tokens are skipped, not averaged in as zeros.
  CHECK(Extract(Text("a zzz"), "", cfg, v, &t).dense == std::vector<double>{1.0, 0.0});
  CHECK(Extract(Text("zzz"), "", cfg, v, &t).dense == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(Extract(Text("a"), "", cfg, v, nullptr), ConfigError);
  EmbeddingTable wide(3);
  CHECK_THROWS_AS(Extract(Text("a"), "", cfg, v, &wide), ConfigError);
}

TEST_CASE("CoNLL-U sidecars") {
  std::istringstream in(
      "# utterance_id = d1/u1\n"
      "1\tclose\tclose\tVERB\tVB\t_\t0\troot\t_\t_\n"
      "2\tit\tit\tPRON\t_\t_\t1\tobj\t_\t_\n\n"
      "# utterance_id = u2\n# alignment = failed\n\n");
  Annotations a = ParseConllu(in, "s.conllu");
  REQUIRE(a.size() == 2);
  const auto &toks = a.at("d1/u1");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].pos == "VB");
  CHECK(toks[1].pos == "PRON");  // UPOS fills in a missing XPOS
  CHECK(toks[0].head == kRootHead);
  CHECK(toks[1].head == 0);
  CHECK(a.at("u2").empty());

  std::stringstream out;
  WriteConllu(out, "d1/u1", toks);
  CHECK(ParseConllu(out, "rt").at("d1/u1") == toks);

  auto expect_locator = [](const std::string &text, const std::string &loc) {
    std::istringstream s(text);
    try {
      ParseConllu(s, "x");
      FAIL("expected a parse error");
    } catch (const ParseError &e) {
      CHECK(e.locator() == loc);
    }
  };
  expect_locator("1\ta\ta\tX\tX\t_\t0\troot\t_\t_\n", "x:1");
  expect_locator("# utterance_id = a\n1\ta\n", "x:2");
  expect_locator("# utterance_id = a\n2\ta\ta\tX\tX\t_\t0\troot\t_\t_\n", "x:2");
  CHECK_THROWS_AS(LoadConllu("/nonexistent.conllu"), IoError);
}

TEST_CASE("annotation attachment") {
  DialogueCollection ds(1);
  ds[0].dialogue_id = "d";
  for (const char *t : {"one two", "three", "four five", "six"}) {
    Utterance u = Text(t);
    u.utterance_id = "u" + std::to_string(ds[0].utterances.size());
    ds[0].utterances.push_back(u);
  }
  Annotations a;
  a["d/u0"] = Tokens({{"CD", "root"}, {"CD", "dep"}});
  a["u1"] = Tokens({{"CD", "root"}});                       // bare id
  a["d/u2"] = Tokens({{"CD", "root"}});                     // wrong length
  AlignmentReport r = AttachAnnotations(ds, a);
  CHECK(r.aligned == 2);
  CHECK(r.failed == 1);
  CHECK(r.missing == 1);
  CHECK(r.failed_ids == std::vector<std::string>{"d/u2"});
  CHECK(ds[0].utterances[0].tokens->size() == 2);
  CHECK(ds[0].utterances[2].tokens->empty());
  CHECK_FALSE(ds[0].utterances[3].tokens.has_value());
}

TEST_CASE("fixture sidecars align except the marked failure") {
  DialogueCollection ds = testing::LoadFixture(Corpus::kSLogs);
  size_t failed = 0;
  for (const auto &d : ds) {
    for (const auto &u : d.utterances) {
      REQUIRE(u.tokens.has_value());
      if (u.tokens->empty()) {
        ++failed;
        CHECK(d.dialogue_id + "/" + u.utterance_id == "s001/t04");
      } else {
        CHECK(u.tokens->size() == SplitTokens(*u.normalized_text).size());
      }
    }
  }
  CHECK(failed == 1);
}

TEST_CASE("batch extraction matches the serial reference") {
  DialogueCollection ds = testing::LoadFixture(Corpus::kSwda);
  EmbeddingTable emb = EmbeddingTable::Load(testing::FixtureDir() + "/embeddings.txt", 8);
  FeatureConfig cfg = FeatureConfig::Parse("1-2-3-grams+PREV+POS+I-POS+DEP+I-DEP+WE");
  cfg.embedding_dim = 8;
  Vocabulary vocab;
  std::vector<ExtractRequest> reqs;
  for (const auto &d : ds) {
    std::string prev;
    for (const auto &u : d.utterances) {
      reqs.push_back({&u, prev});
      Extract(u, prev, cfg, vocab, &emb);
      prev = u.mapped_tags->front().node;
    }
  }
  vocab.Freeze();
  auto par = ExtractBatch(reqs, cfg, vocab, &emb);
  auto ser = ExtractBatchSerial(reqs, cfg, vocab, &emb);
  REQUIRE(par.size() == reqs.size());
  CHECK(par == ser);
  for (size_t i = 0; i < reqs.size(); ++i) {
    CHECK(par[i] == ExtractFrozen(*reqs[i].utterance, reqs[i].prev_tag, cfg, vocab, &emb));
  }
}

}  // namespace
}  // namespace datag
