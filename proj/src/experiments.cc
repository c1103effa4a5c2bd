#include "datag/experiments.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "datag/errors.h"
#include "json.hpp"

namespace datag {

using Json = nlohmann::json;

namespace {

std::string Percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * fraction);
  return buf;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

FeatureRow ParseFeatureRow(const Json &j, int embedding_dim) {
  FeatureRow row;
  std::string spec;
  if (j.is_string()) {
    spec = j.get<std::string>();
    row.name = spec;
  } else {
    spec = j.at("spec").get<std::string>();
    row.name = j.value("name", spec);
  }
  row.features = FeatureConfig::Parse(spec);
  if (row.features.use_embeddings) row.features.embedding_dim = embedding_dim;
  return row;
}

std::vector<Corpus> ParseCorpusList(const Json &j) {
  std::vector<Corpus> out;
  for (const auto &c : j) out.push_back(ParseCorpus(c.get<std::string>()));
  return out;
}

DialogueCollection Concat(const ExperimentData &data, const std::vector<Corpus> &corpora,
                          const std::optional<std::string> &split) {
  DialogueCollection out;
  for (Corpus c : corpora) {
    auto it = data.corpora.find(c);
    if (it == data.corpora.end()) {
      throw UsageError("corpus " + std::string(CorpusName(c)) + " is not loaded");
    }
    DialogueCollection part = SelectSplit(it->second, split);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

const DialogueCollection &TestCorpus(const ExperimentData &data, const TestSetSpec &spec) {
  auto it = data.corpora.find(spec.corpus);
  if (it == data.corpora.end()) {
    throw UsageError("test corpus " + std::string(CorpusName(spec.corpus)) +
                     " is not loaded");
  }
  return it->second;
}

TagOptions OptionsFor(const ExperimentConfig &cfg, const ExperimentData &data) {
  TagOptions opts;
  opts.context = cfg.context;
  opts.embeddings = data.embeddings;
  opts.collapser = data.collapser;
  return opts;
}

TaggerModel Train(const ExperimentConfig &cfg, const ExperimentData &data,
                  const DialogueCollection &train, const FeatureConfig &features,
                  double C) {
  TaggerConfig tc;
  tc.mode = cfg.mode;
  tc.features = features;
  tc.train = cfg.train;
  tc.train.C = C;
  tc.require_all_classes = cfg.require_all_classes;
  if (data.taxonomy == nullptr) throw UsageError("experiment data has no taxonomy");
  return TrainTagger(train, tc, *data.taxonomy, OptionsFor(cfg, data));
}

std::vector<std::string> TrainingLabels(const ExperimentConfig &cfg,
                                        const ExperimentData &data,
                                        const DialogueCollection &train) {
  std::vector<std::string> labels;
  for (const auto &d : train) {
    for (const auto &u : d.utterances) {
      if (cfg.mode == TaggerMode::kSwda42) {
        labels.push_back(GoldContextTag(u, cfg.mode, data.collapser));
      } else if (auto f = GoldFunction(u, Dimension::kTask, *data.taxonomy)) {
        labels.push_back(*f);
      }
    }
  }
  return labels;
}

// Gold labels of a test set in the evaluation order of EvaluateOn.
LabelPairs MajorityPairs(const std::string &majority, const ExperimentConfig &cfg,
                         const ExperimentData &data, const DialogueCollection &test,
                         const TestSetSpec &spec) {
  EvalFilter filter{spec.speakers};
  LabelPairs out;
  for (const auto &d : test) {
    for (const auto &u : d.utterances) {
      if (!filter.Keeps(u)) continue;
      std::optional<std::string> gold;
      if (cfg.mode == TaggerMode::kSwda42) {
        gold = GoldContextTag(u, cfg.mode, data.collapser);
      } else {
        gold = GoldFunction(u, Dimension::kTask, *data.taxonomy);
      }
      if (!gold) continue;
      out.gold.push_back(*gold);
      out.predicted.push_back(majority);
      out.keys.push_back(d.dialogue_id + "/" + u.utterance_id);
    }
  }
  return out;
}

SignificanceRow Compare(const std::string &column, const std::string &row_a,
                        const LabelPairs &a, const std::string &row_b,
                        const LabelPairs &b, const ExperimentConfig &cfg) {
  if (a.keys != b.keys) {
    throw UsageError("significance test over differently ordered instances");
  }
  SignificanceRow s;
  s.column = column;
  s.row_a = row_a;
  s.row_b = row_b;
  s.accuracy_a = Accuracy(a.predicted, a.gold);
  s.accuracy_b = Accuracy(b.predicted, b.gold);
  s.result = McNemar(a.predicted, b.predicted, a.gold, cfg.exact_below);
  s.significant = s.result.p_value < cfg.alpha;
  return s;
}

void Require(bool ok, const std::string &what) {
  if (!ok) throw UsageError(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::FromJson(const std::string &text,
                                            const std::string &locator) {
  ExperimentConfig cfg;
  try {
    Json j = Json::parse(text);
    cfg.name = j.at("name").get<std::string>();
    cfg.title = j.value("title", cfg.name);
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "feature_study") {
      cfg.kind = ExperimentKind::kFeatureStudy;
    } else if (kind == "dimensions") {
      cfg.kind = ExperimentKind::kDimensions;
    } else if (kind == "ablation") {
      cfg.kind = ExperimentKind::kAblation;
    } else {
      throw ParseError(locator, "unknown experiment kind '" + kind + "'");
    }
    cfg.mode = ParseTaggerMode(j.at("mode").get<std::string>());
    cfg.embedding_dim = j.value("embedding_dim", 0);
    const Json &train = j.at("train");
    cfg.train_corpora = ParseCorpusList(train.at("corpora"));
    if (train.contains("split")) cfg.train_split = train.at("split").get<std::string>();
    if (j.contains("dev")) cfg.dev_split = j.at("dev").at("split").get<std::string>();
    for (const auto &t : j.at("test_sets")) {
      TestSetSpec spec;
      spec.name = t.at("name").get<std::string>();
      spec.corpus = ParseCorpus(t.at("corpus").get<std::string>());
      if (t.contains("split")) spec.split = t.at("split").get<std::string>();
      if (t.contains("speakers")) {
        for (const auto &s : t.at("speakers")) spec.speakers.insert(s.get<std::string>());
      }
      cfg.test_sets.push_back(std::move(spec));
    }
    for (const auto &f : j.at("features")) {
      cfg.features.push_back(ParseFeatureRow(f, cfg.embedding_dim));
    }
    if (j.contains("subsets")) {
      for (const auto &s : j.at("subsets")) {
        cfg.subsets.push_back(
            {s.at("name").get<std::string>(), ParseCorpusList(s.at("corpora"))});
      }
    }
    cfg.train.C = j.value("C", cfg.train.C);
    cfg.train.seed = j.value("seed", cfg.train.seed);
    cfg.train.tolerance = j.value("tolerance", cfg.train.tolerance);
    cfg.train.max_outer_iterations =
        j.value("max_outer_iterations", cfg.train.max_outer_iterations);
    cfg.majority_baseline = j.value("majority_baseline", cfg.majority_baseline);
    if (j.contains("tune")) {
      const Json &t = j.at("tune");
      cfg.tune_features = ParseFeatureRow(t.at("features"), cfg.embedding_dim);
      cfg.tune_grid = t.at("grid").get<std::vector<double>>();
    }
    if (j.contains("context")) {
      cfg.context = ParseContextMode(j.at("context").get<std::string>());
    }
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.exact_below = j.value("exact_below", cfg.exact_below);
    cfg.require_all_classes = j.value("require_all_classes", cfg.require_all_classes);
  } catch (const Json::exception &e) {
    throw ParseError(locator, e.what());
  } catch (const UsageError &e) {
    throw ParseError(locator, e.what());
  }
  if (cfg.features.empty()) throw ParseError(locator, "no feature rows");
  if (cfg.test_sets.empty()) throw ParseError(locator, "no test sets");
  if (cfg.kind == ExperimentKind::kAblation && cfg.subsets.empty()) {
    throw ParseError(locator, "ablation without subsets");
  }
  if (cfg.tune_features && !cfg.dev_split) {
    throw ParseError(locator, "C tuning needs a dev split");
  }
  for (const auto &row : cfg.features) {
    if (row.features.use_embeddings && cfg.embedding_dim <= 0) {
      throw ParseError(locator, "feature row '" + row.name + "' needs embedding_dim");
    }
  }
  try {
    cfg.train.Validate();
  } catch (const UsageError &e) {
    throw ParseError(locator, e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open experiment config");
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str(), path);
}

std::set<Corpus> ExperimentConfig::RequiredCorpora() const {
  std::set<Corpus> out(train_corpora.begin(), train_corpora.end());
  for (const auto &s : subsets) out.insert(s.corpora.begin(), s.corpora.end());
  for (const auto &t : test_sets) out.insert(t.corpus);
  return out;
}

bool ExperimentConfig::NeedsEmbeddings() const {
  for (const auto &r : features) {
    if (r.features.use_embeddings) return true;
  }
  return tune_features && tune_features->features.use_embeddings;
}

bool ExperimentConfig::NeedsSidecars() const {
  for (const auto &r : features) {
    if (r.features.NeedsTokens()) return true;
  }
  return tune_features && tune_features->features.NeedsTokens();
}

// ---------------------------------------------------------------------------
// Tables

std::optional<double> ResultTable::Value(const std::string &row,
                                         const std::string &column) const {
  auto r = std::find(rows.begin(), rows.end(), row);
  auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) return std::nullopt;
  return cells[r - rows.begin()][c - columns.begin()].value;
}

std::string ResultTable::ToTsv() const {
  std::ostringstream out;
  out << "row";
  for (const auto &c : columns) out << '\t' << c;
  out << '\n';
  for (size_t r = 0; r < rows.size(); ++r) {
    out << rows[r];
    for (const auto &cell : cells[r]) {
      out << '\t' << (cell.value ? Percent(*cell.value) : "--") << (cell.star ? "*" : "");
    }
    out << '\n';
  }
  return out.str();
}

std::string ResultTable::SignificanceTsv() const {
  std::ostringstream out;
  out << "column\trow_a\trow_b\tacc_a\tacc_b\tb\tc\tstatistic\tp_value\tmethod\tsignificant\n";
  for (const auto &s : significance) {
    out << s.column << '\t' << s.row_a << '\t' << s.row_b << '\t' << Percent(s.accuracy_a)
        << '\t' << Percent(s.accuracy_b) << '\t' << s.result.table.only_a_correct << '\t'
        << s.result.table.only_b_correct << '\t' << Fixed(s.result.statistic, 4) << '\t'
        << Fixed(s.result.p_value, 6) << '\t' << s.result.method << '\t'
        << (s.significant ? "yes" : "no") << '\n';
  }
  return out.str();
}

std::string ResultTable::Render() const {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({""});
  for (const auto &c : columns) grid.back().push_back(c);
  for (size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> line = {rows[r]};
    for (const auto &cell : cells[r]) {
      line.push_back((cell.value ? Percent(*cell.value) : "--") + (cell.star ? "*" : " "));
    }
    grid.push_back(std::move(line));
  }
  std::vector<size_t> width(columns.size() + 1, 0);
  for (const auto &line : grid) {
    for (size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], line[k].size());
  }
  auto rule = [&] {
    std::string s = "+";
    for (size_t w : width) s += std::string(w + 2, '-') + "+";
    return s + "\n";
  };
  std::ostringstream out;
  out << title << '\n' << rule();
  for (size_t i = 0; i < grid.size(); ++i) {
    out << "|";
    for (size_t k = 0; k < grid[i].size(); ++k) {
      const std::string &s = grid[i][k];
      std::string pad(width[k] - s.size(), ' ');
      out << ' ' << (k == 0 ? s + pad : pad + s) << " |";
    }
    out << '\n';
    if (i == 0) out << rule();
  }
  out << rule();
  for (const auto &[k, v] : notes) out << k << ": " << v << '\n';
  return out.str();
}

DialogueCollection SelectSplit(const DialogueCollection &collection,
                               const std::optional<std::string> &split) {
  if (!split) return collection;
  DialogueCollection out;
  for (const auto &d : collection) {
    auto it = d.metadata.find(kMetaSplit);
    if (it != d.metadata.end() && it->second == *split) out.push_back(d);
  }
  if (out.empty() && !collection.empty()) {
    throw UsageError("split '" + *split + "' selects no dialogues");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Drivers

LabelPairs EvaluateOn(const TaggerModel &model, const DialogueCollection &test,
                      const TestSetSpec &spec, const TagOptions &opts) {
  EvalFilter filter{spec.speakers};
  if (model.mode == TaggerMode::kSwda42) return EvaluateFlat(model, test, opts, filter);
  auto per_dim = EvaluateFunctionsGoldDims(model, test, opts, filter);
  auto it = per_dim.find(Dimension::kTask);
  if (it == per_dim.end()) throw UsageError("model has no Task function classifier");
  return it->second;
}

ResultTable RunFeatureStudy(const ExperimentConfig &cfg, const ExperimentData &data) {
  ResultTable table;
  table.name = cfg.name;
  table.title = cfg.title;
  for (const auto &t : cfg.test_sets) table.columns.push_back(t.name);
  const DialogueCollection train = Concat(data, cfg.train_corpora, cfg.train_split);
  Require(!train.empty(), "experiment " + cfg.name + " has no training dialogues");
  const TagOptions opts = OptionsFor(cfg, data);

  if (cfg.tune_features) {
    DialogueCollection dev = Concat(data, cfg.train_corpora, cfg.dev_split);
    double best_acc = -1.0;
    double best_C = 0.0;
    for (double C : cfg.tune_grid) {
      TaggerModel m = Train(cfg, data, train, cfg.tune_features->features, C);
      TestSetSpec dev_spec{"dev", cfg.train_corpora.front(), cfg.dev_split, {}};
      LabelPairs p = EvaluateOn(m, dev, dev_spec, opts);
      double acc = Accuracy(p.predicted, p.gold);
      table.tuning.emplace_back(C, acc);
      table.notes.emplace_back("dev accuracy " + cfg.tune_features->name + " C=" +
                                   Fixed(C, 4),
                               Percent(acc));
      if (acc > best_acc || (acc == best_acc && C < best_C)) {
        best_acc = acc;
        best_C = C;
      }
    }
    table.notes.emplace_back("tuned C", Fixed(best_C, 4));
  }

  std::vector<DialogueCollection> test_storage;
  test_storage.reserve(cfg.test_sets.size());
  for (const auto &t : cfg.test_sets) {
    test_storage.push_back(SelectSplit(TestCorpus(data, t), t.split));
  }

  if (cfg.majority_baseline) {
    const std::string majority = MajorityLabel(TrainingLabels(cfg, data, train));
    std::vector<Cell> row;
    for (size_t k = 0; k < cfg.test_sets.size(); ++k) {
      LabelPairs p = MajorityPairs(majority, cfg, data, test_storage[k], cfg.test_sets[k]);
      row.push_back({p.gold.empty() ? std::nullopt
                                    : std::optional<double>(Accuracy(p.predicted, p.gold)),
                     false});
    }
    table.rows.push_back("BL: Majority");
    table.cells.push_back(std::move(row));
    table.notes.emplace_back("majority label", majority);
  }

  std::vector<LabelPairs> previous;
  std::string previous_name;
  for (const auto &feature_row : cfg.features) {
    TaggerModel m = Train(cfg, data, train, feature_row.features, cfg.train.C);
    std::vector<LabelPairs> current;
    std::vector<Cell> row;
    for (size_t k = 0; k < cfg.test_sets.size(); ++k) {
      LabelPairs p = EvaluateOn(m, test_storage[k], cfg.test_sets[k], opts);
      Cell cell;
      if (!p.gold.empty()) cell.value = Accuracy(p.predicted, p.gold);
      if (!previous.empty() && !p.gold.empty()) {
        SignificanceRow s = Compare(cfg.test_sets[k].name, previous_name, previous[k],
                                    feature_row.name, p, cfg);
        cell.star = s.significant && s.accuracy_b > s.accuracy_a;
        table.significance.push_back(std::move(s));
      }
      row.push_back(cell);
      current.push_back(std::move(p));
    }
    table.rows.push_back(feature_row.name);
    table.cells.push_back(std::move(row));
    previous = std::move(current);
    previous_name = feature_row.name;
  }
  return table;
}

ResultTable RunDimensionStudy(const ExperimentConfig &cfg, const ExperimentData &data) {
  Require(cfg.mode == TaggerMode::kIsoSubset, "dimension study needs ISO_SUBSET mode");
  ResultTable table;
  table.name = cfg.name;
  table.title = cfg.title;
  for (const auto &t : cfg.test_sets) table.columns.push_back(t.name);
  const DialogueCollection train = Concat(data, cfg.train_corpora, cfg.train_split);
  Require(!train.empty(), "experiment " + cfg.name + " has no training dialogues");
  const TagOptions opts = OptionsFor(cfg, data);
  TaggerModel m = Train(cfg, data, train, cfg.features.front().features, cfg.train.C);
  table.notes.emplace_back("features", cfg.features.front().features.Name());

  const std::vector<std::pair<std::string, Dimension>> dims = {
      {"General", Dimension::kTask},
      {"SOM", Dimension::kSom},
      {"Feedback", Dimension::kFeedback}};
  for (const auto &[name, dim] : dims) table.rows.push_back(name);
  table.rows.push_back("Overall (micro)");
  table.rows.push_back("Overall (macro)");
  table.cells.assign(table.rows.size(), std::vector<Cell>(cfg.test_sets.size()));

  for (size_t k = 0; k < cfg.test_sets.size(); ++k) {
    const auto &spec = cfg.test_sets[k];
    DialogueCollection test = SelectSplit(TestCorpus(data, spec), spec.split);
    DimensionReport r = EvaluateDimensions(m, test, opts, EvalFilter{spec.speakers});
    for (const auto &score : r.dimensions) {
      for (size_t i = 0; i < dims.size(); ++i) {
        if (dims[i].second == score.dimension) table.cells[i][k].value = score.accuracy();
      }
    }
    if (!r.dimensions.empty()) {
      table.cells[dims.size()][k].value = r.micro;
      table.cells[dims.size() + 1][k].value = r.macro;
    }
  }
  return table;
}

ResultTable RunAblation(const ExperimentConfig &cfg, const ExperimentData &data) {
  ResultTable table;
  table.name = cfg.name;
  table.title = cfg.title;
  for (const auto &t : cfg.test_sets) table.columns.push_back(t.name);
  const TagOptions opts = OptionsFor(cfg, data);
  const FeatureConfig &features = cfg.features.front().features;
  table.notes.emplace_back("features", features.Name());

  std::vector<DialogueCollection> tests;
  for (const auto &t : cfg.test_sets) tests.push_back(SelectSplit(TestCorpus(data, t), t.split));

  std::vector<LabelPairs> reference;
  for (const auto &subset : cfg.subsets) {
    const DialogueCollection train = Concat(data, subset.corpora, cfg.train_split);
    Require(!train.empty(), "subset " + subset.name + " has no training dialogues");
    TaggerModel m = Train(cfg, data, train, features, cfg.train.C);
    std::vector<Cell> row;
    std::vector<LabelPairs> current;
    for (size_t k = 0; k < cfg.test_sets.size(); ++k) {
      LabelPairs p = EvaluateOn(m, tests[k], cfg.test_sets[k], opts);
      Cell cell;
      if (!p.gold.empty()) cell.value = Accuracy(p.predicted, p.gold);
      if (!reference.empty() && !p.gold.empty()) {
        SignificanceRow s = Compare(cfg.test_sets[k].name, cfg.subsets.front().name,
                                    reference[k], subset.name, p, cfg);
        cell.star = s.significant;
        table.significance.push_back(std::move(s));
      }
      row.push_back(cell);
      current.push_back(std::move(p));
    }
    table.rows.push_back(subset.name);
    table.cells.push_back(std::move(row));
    if (reference.empty()) reference = std::move(current);
  }
  return table;
}

ResultTable RunExperiment(const ExperimentConfig &cfg, const ExperimentData &data) {
  switch (cfg.kind) {
    case ExperimentKind::kFeatureStudy:
      return RunFeatureStudy(cfg, data);
    case ExperimentKind::kDimensions:
      return RunDimensionStudy(cfg, data);
    case ExperimentKind::kAblation:
      return RunAblation(cfg, data);
  }
  throw UsageError("unknown experiment kind");
}

// ---------------------------------------------------------------------------
// Loading pipeline

DialogueCollection PrepareCollection(DialogueCollection dialogues,
                                     const PrepareOptions &opts,
                                     PrepareReport *report) {
  PrepareReport local;
  PrepareReport &r = report ? *report : local;
  r.ingested = CountUtterances(dialogues);
  if (opts.map) {
    if (opts.rules == nullptr || opts.taxonomy == nullptr) {
      throw UsageError("mapping needs rule tables and a taxonomy");
    }
    auto [mapped, drops] = MapCorpus(dialogues, *opts.rules, *opts.taxonomy, opts.collapser);
    dialogues = std::move(mapped);
    r.dropped_by_mapping = r.ingested - CountUtterances(dialogues);
    r.drops = std::move(drops);
  }
  NormalizeCollection(dialogues, opts.normalization);
  r.dropped_empty = DropEmpty(dialogues);
  if (opts.sidecar_path) {
    r.alignment = AttachAnnotations(dialogues, LoadConllu(*opts.sidecar_path));
  }
  return dialogues;
}

DialogueCollection PrepareCorpus(const CorpusManifest &manifest,
                                 const std::string &root, const PrepareOptions &opts,
                                 PrepareReport *report) {
  return PrepareCollection(ReadCorpus(manifest, root), opts, report);
}

}  // namespace datag
