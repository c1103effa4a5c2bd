#include <set>

#include "datag/errors.h"
#include "datag/experiments.h"
#include "doctest.h"
#include "test_util.h"

namespace datag {
namespace {

using testing::SharedCollapser;
using testing::SharedTaxonomy;

std::string ConfigPath(const std::string &name) {
  return testing::SourceDir() + "/experiments/" + name;
}

const EmbeddingTable &FixtureEmbeddings() {
  static const EmbeddingTable t =
      EmbeddingTable::Load(testing::FixtureDir() + "/embeddings.txt", 8);
  return t;
}

// Fixture corpora prepared the way the command line prepares them.
ExperimentData Load(const ExperimentConfig &cfg) {
  static std::map<std::pair<Corpus, bool>, DialogueCollection> cache;
  ExperimentData data;
  const bool map = cfg.mode == TaggerMode::kIsoSubset;
  for (Corpus c : cfg.RequiredCorpora()) {
    auto key = std::make_pair(c, map);
    if (!cache.count(key)) cache[key] = testing::LoadFixture(c, map);
    data.corpora[c] = cache[key];
  }
  data.embeddings = &FixtureEmbeddings();
  data.collapser = &SharedCollapser();
  data.taxonomy = &SharedTaxonomy();
  return data;
}

TEST_CASE("experiment configs parse") {
  for (int t = 3; t <= 6; ++t) {
    CAPTURE(t);
    ExperimentConfig real = ExperimentConfig::Load(ConfigPath("table" + std::to_string(t) + ".json"));
    ExperimentConfig fix =
        ExperimentConfig::Load(ConfigPath("fixtures/table" + std::to_string(t) + ".json"));
    CHECK(real.embedding_dim == 300);
    CHECK(fix.embedding_dim == 8);
    CHECK(real.kind == fix.kind);
    CHECK(real.features.size() == fix.features.size());
    CHECK(real.train.C == 0.1);
  }
  ExperimentConfig t3 = ExperimentConfig::Load(ConfigPath("table3.json"));
  CHECK(t3.mode == TaggerMode::kSwda42);
  CHECK(t3.features.size() == 9);
  CHECK(t3.tune_grid == std::vector<double>{1.0, 0.1});
  CHECK(t3.RequiredCorpora() == std::set<Corpus>{Corpus::kSwda});
  CHECK(t3.NeedsEmbeddings());
  CHECK(t3.NeedsSidecars());
  ExperimentConfig t6 = ExperimentConfig::Load(ConfigPath("table6.json"));
  CHECK(t6.subsets.size() == 8);
  CHECK_FALSE(t6.require_all_classes);
  CHECK(t6.test_sets[2].speakers == std::set<std::string>{"user"});
}

TEST_CASE("experiment config errors") {
  const std::string base =
      R"("name": "x", "mode": "ISO_SUBSET", "train": {"corpora": ["SWDA"]},
         "test_sets": [{"name": "DB", "corpus": "DIALOGBANK"}])";
  auto parse = [&](const std::string &extra) {
    return ExperimentConfig::FromJson("{" + base + extra + "}", "cfg.json");
  };
  CHECK_NOTHROW(parse(R"(, "kind": "feature_study", "features": ["1-grams"])"));
  CHECK_THROWS_AS(parse(R"(, "kind": "regression", "features": ["1-grams"])"), ParseError);
  CHECK_THROWS_AS(parse(R"(, "kind": "feature_study", "features": [])"), ParseError);
  CHECK_THROWS_AS(parse(R"(, "kind": "ablation", "features": ["1-grams"])"), ParseError);
  CHECK_THROWS_AS(parse(R"(, "kind": "feature_study", "features": ["1-grams+WE"])"), ParseError);
  CHECK_THROWS_AS(parse(R"(, "kind": "feature_study", "features": ["1-grams"],
                           "tune": {"features": "1-grams", "grid": [1.0]})"),
                  ParseError);
  CHECK_THROWS_AS(parse(R"(, "kind": "feature_study", "features": ["5-grams"])"), ParseError);
  CHECK_THROWS_AS(ExperimentConfig::FromJson("{", "broken.json"), ParseError);
  CHECK_THROWS_AS(ExperimentConfig::Load("/nonexistent/cfg.json"), IoError);
}

TEST_CASE("split selection") {
  DialogueCollection swda = testing::LoadFixture(Corpus::kSwda, false);
  CHECK(SelectSplit(swda, std::nullopt).size() == swda.size());
  CHECK(SelectSplit(swda, "train").size() + SelectSplit(swda, "dev").size() +
            SelectSplit(swda, "test").size() ==
        swda.size());
  CHECK_THROWS_AS(SelectSplit(swda, "heldout"), UsageError);
}

TEST_CASE("result tables render") {
  ResultTable t;
  t.name = "t";
  t.title = "Title";
  t.columns = {"A", "B"};
  t.rows = {"r1", "r2"};
  t.cells = {{{0.5, false}, {std::nullopt, false}}, {{0.6666, true}, {1.0, false}}};
  CHECK(t.ToTsv() == "row\tA\tB\nr1\t50.0\t--\nr2\t66.7*\t100.0\n");
  CHECK(t.Value("r2", "A") == std::optional<double>(0.6666));
  CHECK_FALSE(t.Value("r1", "B").has_value());
  CHECK_FALSE(t.Value("r9", "A").has_value());
  const std::string r = t.Render();
  CHECK(r.find("Title") != std::string::npos);
  CHECK(r.find("66.7*") != std::string::npos);
}

// Cross-checks a feature study against directly trained taggers.
TEST_CASE("feature study cells equal direct runs") {
  ExperimentConfig cfg = ExperimentConfig::Load(ConfigPath("fixtures/table3.json"));
  ExperimentData data = Load(cfg);
  ResultTable t = RunExperiment(cfg, data);
  REQUIRE(t.rows.size() == cfg.features.size() + 1);
  REQUIRE(t.columns == std::vector<std::string>{"SWDA"});

  const DialogueCollection &all = data.corpora.at(Corpus::kSwda);
  DialogueCollection train = SelectSplit(all, "train");
  DialogueCollection test = SelectSplit(all, "test");
  TagOptions opts;
  opts.collapser = &SharedCollapser();
  opts.embeddings = &FixtureEmbeddings();

  // Majority label of the training data.
  std::vector<std::string> train_labels, test_labels;
  for (const auto &d : train)
    for (const auto &u : d.utterances)
      train_labels.push_back(GoldContextTag(u, TaggerMode::kSwda42, &SharedCollapser()));
  for (const auto &d : test)
    for (const auto &u : d.utterances)
      test_labels.push_back(GoldContextTag(u, TaggerMode::kSwda42, &SharedCollapser()));
  const std::string majority = MajorityLabel(train_labels);
  size_t hits = std::count(test_labels.begin(), test_labels.end(), majority);
  CHECK(*t.cells[0][0].value == doctest::Approx(static_cast<double>(hits) / test_labels.size()));

  for (size_t r : {size_t{1}, size_t{4}, cfg.features.size()}) {
    const FeatureRow &row = cfg.features[r - 1];
    CAPTURE(row.name);
    CHECK(t.rows[r] == row.name);
    TaggerConfig tc;
    tc.mode = TaggerMode::kSwda42;
    tc.features = row.features;
    tc.train = cfg.train;
    TaggerModel m = TrainTagger(train, tc, SharedTaxonomy(), opts);
    LabelPairs p = EvaluateOn(m, test, cfg.test_sets[0], opts);
    CHECK(*t.cells[r][0].value == Accuracy(p.predicted, p.gold));
  }

  // Stars mark significant gains over the previous row, and nothing else.
  for (const auto &s : t.significance) {
    size_t row = std::find(t.rows.begin(), t.rows.end(), s.row_b) - t.rows.begin();
    REQUIRE(row < t.rows.size());
    CHECK(t.cells[row][0].star == (s.significant && s.accuracy_b > s.accuracy_a));
    CHECK(s.significant == (s.result.p_value < cfg.alpha));
  }
  bool has_tuning_note = false;
  for (const auto &[k, v] : t.notes) has_tuning_note |= k.find("C=") != std::string::npos;
  CHECK(has_tuning_note);
}

TEST_CASE("experiments are deterministic") {
  for (const char *name : {"fixtures/table5.json", "fixtures/table6.json"}) {
    CAPTURE(name);
    ExperimentConfig cfg = ExperimentConfig::Load(ConfigPath(name));
    ExperimentData data = Load(cfg);
    ResultTable a = RunExperiment(cfg, data);
    ResultTable b = RunExperiment(cfg, data);
    CHECK(a.ToTsv() == b.ToTsv());
    CHECK(a.SignificanceTsv() == b.SignificanceTsv());
    CHECK(a.Render() == b.Render());
  }
}

TEST_CASE("a singleton ablation equals the direct run") {
  ExperimentConfig ab = ExperimentConfig::Load(ConfigPath("fixtures/table6.json"));
  ab.subsets.resize(1);  // ALL
  ab.require_all_classes = true;
  ExperimentConfig direct = ab;
  direct.kind = ExperimentKind::kFeatureStudy;
  direct.subsets.clear();
  direct.majority_baseline = false;
  ExperimentData data = Load(ab);
  ResultTable a = RunExperiment(ab, data);
  ResultTable d = RunExperiment(direct, data);
  REQUIRE(a.rows.size() == 1);
  REQUIRE(d.rows.size() == 1);
  REQUIRE(a.columns == d.columns);
  for (const auto &c : a.columns) {
    CAPTURE(c);
    CHECK(a.Value("ALL", c) == d.Value(d.rows[0], c));
  }
}

TEST_CASE("dimension study") {
  ExperimentConfig cfg = ExperimentConfig::Load(ConfigPath("fixtures/table4.json"));
  ExperimentData data = Load(cfg);
  ResultTable t = RunExperiment(cfg, data);
  CHECK(t.columns == std::vector<std::string>{"DB", "CAPC", "S-Logs"});
  REQUIRE(t.rows.size() >= 4);
  CHECK(t.rows[0] == "General");
  CHECK(t.rows[1] == "SOM");
  CHECK(t.rows[2] == "Feedback");
  // CAPC carries no Feedback annotation.
  CHECK_FALSE(t.Value("Feedback", "CAPC").has_value());
  CHECK(t.Value("Feedback", "DB").has_value());

  // Independent check of one cell from a directly trained tagger.
  DialogueCollection train;
  for (Corpus c : cfg.train_corpora)
    for (const auto &d : data.corpora.at(c)) train.push_back(d);
  TaggerConfig tc;
  tc.features = cfg.features[0].features;
  tc.train = cfg.train;
  TaggerModel m = TrainTagger(train, tc, SharedTaxonomy(), {});
  DimensionReport r =
      EvaluateDimensions(m, data.corpora.at(Corpus::kSLogs), {}, EvalFilter{{"user"}});
  for (const auto &s : r.dimensions) {
    if (s.dimension == Dimension::kTask) {
      CHECK(*t.Value("General", "S-Logs") == doctest::Approx(s.accuracy()));
    }
  }
}

TEST_CASE("missing corpora are usage errors") {
  ExperimentConfig cfg = ExperimentConfig::Load(ConfigPath("fixtures/table4.json"));
  ExperimentData data = Load(cfg);
  data.corpora.erase(Corpus::kCapc);
  CHECK_THROWS_AS(RunExperiment(cfg, data), UsageError);
}

}  // namespace
}  // namespace datag
