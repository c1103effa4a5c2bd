// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
// Property criteria run on generated data and the bundled fixtures and need
// nothing else. Reproduction criteria need the licensed corpora under
// --data-root (default $DA_DATA_ROOT), one directory per corpus named as the
// lowercase corpus name, plus CoNLL-U sidecars and a word-embedding file;
// whatever is absent is reported as SKIP.
//
// Exit status: 0 when no criterion failed, 1 otherwise, 2 on usage errors.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "datag/errors.h"
#include "datag/experiments.h"
#include "datag/ingest.h"
#include "datag/linear_model.h"
#include "datag/metrics.h"
#include "datag/preprocess.h"
#include "datag/schema_map.h"
#include "datag/svm.h"
#include "datag/tagger.h"
#include "datag/taxonomy.h"
#include "oracles.h"

namespace datag {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string source_dir = DATAG_SOURCE_DIR;
  std::string da = DATAG_DA_BINARY;
  std::string data_root;
  std::string manifests;  // default <source>/data/manifests
  std::string sidecars;   // default <data-root>/sidecars
  std::string emb;        // default <data-root>/embeddings.txt
  int emb_dim = 0;        // default: the experiment's
  int swda_train_limit = 0;
  int jobs = 0;
  bool skip_property = false;
  bool skip_reproduction = false;
  bool report_only = false;
};

// ---------------------------------------------------------------------------
// Reporting

class Report {
 public:
  void Pass(const std::string &id, const std::string &detail) { Line("PASS", id, detail); }
  void Fail(const std::string &id, const std::string &detail) {
    ++failures_;
    Line("FAIL", id, detail);
  }
  void Skip(const std::string &id, const std::string &detail) { Line("SKIP", id, detail); }
  void Check(bool ok, const std::string &id, const std::string &detail) {
    ok ? Pass(id, detail) : Fail(id, detail);
  }
  int failures() const { return failures_; }

 private:
  void Line(const char *status, const std::string &id, const std::string &detail) {
    std::cout << status << ' ' << id << "  " << detail << std::endl;
  }
  int failures_ = 0;
};

std::string Fmt(double v, int digits = 1) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string Sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(1);
  s << v;
  return s.str();
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Runs `body`; an escaping exception fails `id`.
template <typename F>
void Guard(Report &report, const std::string &id, F body) {
  try {
    body();
  } catch (const std::exception &e) {
    report.Fail(id, std::string("error: ") + e.what());
  }
}

// Shared resources from the source tree.
struct Resources {
  Taxonomy taxonomy;
  RuleSet rules;
  SwdaCollapser collapser;

  explicit Resources(const std::string &source_dir)
      : taxonomy(Taxonomy::Load(source_dir + "/data/taxonomy.tsv")),
        rules(RuleSet::LoadDirectory(source_dir + "/data/rules", taxonomy)),
        collapser(SwdaCollapser::Load(source_dir + "/data/ws97_collapse.tsv")) {}
};

std::string FixtureDir(const Options &o) { return o.source_dir + "/data/fixtures"; }

DialogueCollection LoadFixture(const Options &o, const Resources &r, Corpus c, bool map) {
  const std::string name = Lower(CorpusName(c));
  PrepareOptions po;
  po.map = map;
  po.rules = &r.rules;
  po.taxonomy = &r.taxonomy;
  po.collapser = &r.collapser;
  po.sidecar_path = FixtureDir(o) + "/sidecars/" + name + ".conllu";
  return PrepareCorpus(CorpusManifest::Load(FixtureDir(o) + "/manifests/" + name + ".json"),
                       FixtureDir(o) + "/" + name, po);
}

// ---------------------------------------------------------------------------
// Property criteria

void CheckSvm(Report &report) {
  const std::string id = "svm-oracle";
  std::mt19937_64 rng(20240611);
  double worst_primal = 0.0;
  int bad = 0;
  std::string first_problem;
  for (int trial = 0; trial < 25; ++trial) {
    oracles::SvmInstance inst = oracles::RandomSvmInstance(rng);
    oracles::SvmOptimum oracle = oracles::SolveSvm(inst);
    TrainConfig cfg;
    cfg.C = inst.C;
    cfg.tolerance = 1e-6;
    cfg.max_outer_iterations = 200000;
    cfg.seed = 1 + trial;
    TrainTrace trace;
    std::vector<double> w = TrainBinary(inst.xs, inst.ys, inst.layout, cfg, &trace);
    const double primal = PrimalObjective(w, inst.xs, inst.ys, inst.layout, inst.C);
    const double rel = std::abs(primal - oracle.primal) / std::abs(oracle.primal);
    worst_primal = std::max(worst_primal, rel);
    std::string problem;
    if (oracle.relative_gap() > 1e-5) problem = "oracle did not certify its optimum";
    if (rel > 1e-3) problem = "primal off by " + Sci(rel);
    for (double a : trace.alpha) {
      if (a < 0.0 || a > inst.C) problem = "dual variable outside [0, C]";
    }
    for (size_t e = 1; e < trace.dual_objective.size(); ++e) {
      if (trace.dual_objective[e] <
          trace.dual_objective[e - 1] - 1e-12 * std::abs(trace.dual_objective[e - 1])) {
        problem = "dual objective decreased at epoch " + std::to_string(e);
      }
    }
    if (!problem.empty()) {
      ++bad;
      if (first_problem.empty()) {
        first_problem = "instance " + std::to_string(trial) + ": " + problem;
      }
    }
  }
  report.Check(bad == 0, id,
               std::to_string(25 - bad) + "/25 instances; max relative primal difference " +
                   Sci(worst_primal) + " (limit 1e-3)" +
                   (first_problem.empty() ? "" : "; " + first_problem));
}

void CheckNormalization(Report &report) {
  std::mt19937_64 rng(424242);
  int not_idempotent = 0, outside = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string once = Normalize(oracles::RandomTranscript(rng));
    if (Normalize(once) != once) ++not_idempotent;
    if (!oracles::InNormalizedAlphabet(once)) ++outside;
  }
  report.Check(not_idempotent == 0 && outside == 0, "normalization",
               "10000 random transcripts: " + std::to_string(not_idempotent) +
                   " not idempotent, " + std::to_string(outside) + " outside the alphabet");
}

// Fixture oracle counts: corpus -> category -> count.
std::map<std::string, std::map<std::string, long>> LoadCountTable(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::map<std::string, std::map<std::string, long>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream s(line);
    std::string corpus, category;
    long count = 0;
    s >> corpus >> category >> count;
    out[corpus][category] = count;
  }
  return out;
}

void CheckMapping(Report &report, const Options &o, const Resources &r) {
  const auto oracle = LoadCountTable(FixtureDir(o) + "/mapped_counts.tsv");
  std::vector<std::string> problems;
  size_t corpora = 0;
  for (Corpus c : AllCorpora()) {
    if (c == Corpus::kCustom) continue;
    const std::string name(CorpusName(c));
    const std::string lower = Lower(name);
    DialogueCollection raw =
        ReadCorpus(CorpusManifest::Load(FixtureDir(o) + "/manifests/" + lower + ".json"),
                   FixtureDir(o) + "/" + lower);
    auto [mapped, drops] = MapCorpus(raw, r.rules, r.taxonomy, &r.collapser);
    const CorpusDropStats &s = drops.per_corpus.at(c);
    const auto &want = oracle.at(name);
    if (s.retained + s.dropped != s.ingested || s.ingested != CountUtterances(raw) ||
        s.retained != CountUtterances(mapped)) {
      problems.push_back(name + " retained + dropped != ingested");
    }
    if (static_cast<long>(s.retained) != want.at("retained") ||
        static_cast<long>(s.dropped) != want.at("dropped")) {
      problems.push_back(name + " retained/dropped differ from the fixture oracle");
    }
    for (Level level : {Level::kDimension, Level::kTaskFunction, Level::kSomFunction}) {
      for (const auto &row : CorpusStats(mapped, level, r.taxonomy).rows) {
        auto it = want.find(row.category);
        if (it == want.end() || it->second != static_cast<long>(row.count)) {
          problems.push_back(name + " " + row.category + " count " + std::to_string(row.count));
        }
      }
    }
    ++corpora;
  }
  auto map_one = [&](Corpus c, const std::string &tag) -> std::string {
    Utterance u;
    u.utterance_id = "u";
    u.raw_text = "x";
    u.source_tags.push_back({"x", tag});
    MapOutcome m = MapUtterance(u, c, r.rules, r.taxonomy, &r.collapser);
    if (m.dropped() || m.mapped->mapped_tags->size() != 1) return "";
    return m.mapped->mapped_tags->front().node;
  };
  const struct {
    Corpus corpus;
    const char *tag;
    const char *want;
  } spots[] = {{Corpus::kSwda, "qw", "SetQ"},
               {Corpus::kMapTask, "query_yn", "PropQ"},
               {Corpus::kOasis, "thank", "Thanking"},
               {Corpus::kAmi, "Elicit-inform", "Question"}};
  for (const auto &s : spots) {
    const std::string got = map_one(s.corpus, s.tag);
    if (got != s.want) {
      problems.push_back(std::string(CorpusName(s.corpus)) + " " + s.tag + " -> '" + got +
                         "', wanted " + s.want);
    }
  }
  report.Check(problems.empty(), "mapping-integrity",
               std::to_string(corpora) + " fixture corpora and 4 spot rules" +
                   (problems.empty() ? "" : "; " + problems.front()));
}

void CheckSignificance(Report &report) {
  int tables = 0, bad = 0;
  for (long b = 0; b <= 30; ++b) {
    for (long c = 0; b + c <= 30; ++c) {
      if (b + c == 0) continue;
      ++tables;
      McNemarResult r = McNemarFromCounts(b, c);
      const double want = b + c < kMcNemarExactBelow ? oracles::PascalTwoSided(b, c)
                                                     : oracles::SimpsonChi2Sf(r.statistic);
      const double d = std::abs(b - c) - 1.0;
      if (std::abs(r.p_value - want) > 1e-9 * std::max(1.0, want) ||
          std::abs(r.statistic - d * d / (b + c)) > 1e-12) {
        ++bad;
      }
    }
  }
  // Kappa: the hand case and random labelings against a confusion matrix.
  const double hand = CohenKappa({"x", "x", "y", "y"}, {"x", "y", "y", "y"});
  std::mt19937_64 rng(7);
  int kappa_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 60);
    const int k = 1 + static_cast<int>(rng() % 5);
    std::vector<std::string> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = std::string(1, static_cast<char>('a' + rng() % k));
      b[i] = rng() % 3 ? a[i] : std::string(1, static_cast<char>('a' + rng() % k));
    }
    const double want = oracles::ConfusionKappa(a, b);
    if (std::isnan(want)) continue;
    if (std::abs(CohenKappa(a, b) - want) > 1e-12) ++kappa_bad;
  }
  report.Check(bad == 0 && hand == 0.5 && kappa_bad == 0, "mcnemar-kappa",
               std::to_string(tables - bad) + "/" + std::to_string(tables) +
                   " McNemar tables with b + c <= 30 match; kappa hand case " + Fmt(hand, 3) +
                   " (exactly 0.5 required); " + std::to_string(kappa_bad) +
                   " random kappa mismatches");
}

std::string ReadFile(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every regular file below `dir`, relative path -> bytes.
std::map<std::string, std::string> Snapshot(const fs::path &dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = ReadFile(e.path());
  }
  return out;
}

std::string Quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

void CheckDeterminism(Report &report, const Options &o) {
  const std::string id = "determinism";
  if (!fs::exists(o.da)) {
    report.Fail(id, "da binary not found at " + o.da);
    return;
  }
  const fs::path tmp = fs::temp_directory_path() / ("datag_accept_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  std::string roots;
  for (Corpus c : AllCorpora()) {
    if (c == Corpus::kCustom) continue;
    const std::string name = Lower(CorpusName(c));
    roots += " --" + name + " " + Quote(FixtureDir(o) + "/" + name);
  }
  std::vector<std::string> differing;
  int tables = 0;
  for (int t = 3; t <= 6; ++t) {
    const std::string cfg =
        o.source_dir + "/experiments/fixtures/table" + std::to_string(t) + ".json";
    std::map<std::string, std::string> snaps[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = tmp / ("t" + std::to_string(t) + "_" + std::to_string(run));
      fs::create_directories(out);
      const std::string cmd =
          Quote(o.da) + " --manifests " + Quote(FixtureDir(o) + "/manifests") +
          " reproduce-table --config " + Quote(cfg) + " --out " + Quote(out.string()) +
          " --sidecars " + Quote(FixtureDir(o) + "/sidecars") + " --emb " +
          Quote(FixtureDir(o) + "/embeddings.txt") + roots + " > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        fs::remove_all(tmp);
        report.Fail(id, "da reproduce-table failed on table" + std::to_string(t) +
                            " (status " + std::to_string(rc) + ")");
        return;
      }
      snaps[run] = Snapshot(out);
    }
    if (snaps[0].empty() || snaps[0] != snaps[1]) differing.push_back("table" + std::to_string(t));
    ++tables;
  }
  fs::remove_all(tmp);
  report.Check(differing.empty(), id,
               "two seeded reproduce-table runs on " + std::to_string(tables) +
                   " fixture tables" +
                   (differing.empty() ? " are byte-identical" : "; outputs differ: " + differing[0]));
}

// Dimensions whose detector fired, or the best-scoring one when none did.
std::set<Dimension> ExpectedDimensions(const TaggedUtterance &t) {
  std::set<Dimension> fired;
  std::optional<Dimension> best;
  double best_score = 0.0;
  for (Dimension d : {Dimension::kTask, Dimension::kSom, Dimension::kFeedback}) {
    auto it = t.scores.find("dimension:" + std::string(DimensionName(d)));
    if (it == t.scores.end()) continue;
    if (it->second > 0) fired.insert(d);
    if (!best || it->second > best_score) {
      best = d;
      best_score = it->second;
    }
  }
  if (fired.empty() && best) fired.insert(*best);
  return fired;
}

void CheckTagger(Report &report, const Options &o, const Resources &r) {
  DialogueCollection train;
  for (Corpus c : {Corpus::kSwda, Corpus::kAmi, Corpus::kMapTask, Corpus::kVerbMobil,
                   Corpus::kOasis}) {
    for (auto &d : LoadFixture(o, r, c, true)) train.push_back(std::move(d));
  }
  TaggerConfig cfg;
  cfg.features = FeatureConfig::Parse("1-2-grams+PREV+I-POS+I-DEP");
  const TaggerModel model = TrainTagger(train, cfg, r.taxonomy, {});

  size_t utterances = 0, multi = 0, fallback = 0;
  std::vector<std::string> problems;
  for (Corpus c : {Corpus::kDialogBank, Corpus::kCapc, Corpus::kSLogs}) {
    const DialogueCollection test = LoadFixture(o, r, c, true);
    for (ContextMode mode : {ContextMode::kGoldPrev, ContextMode::kPredictedPrev}) {
      TagOptions opts;
      opts.context = mode;
      const auto tagged = TagCollection(model, test, opts);
      for (size_t i = 0; i < test.size(); ++i) {
        if (tagged[i].size() != test[i].utterances.size()) {
          problems.push_back(test[i].dialogue_id + ": utterance count changed");
          continue;
        }
        for (const auto &t : tagged[i]) {
          ++utterances;
          if (t.predicted.empty()) problems.push_back(t.utterance_id + " has no tag");
          std::set<Dimension> dims;
          for (const auto &tag : t.predicted) dims.insert(tag.dimension);
          if (dims != ExpectedDimensions(t)) {
            problems.push_back(t.utterance_id + ": emitted dimensions differ from detectors");
          }
          if (dims.size() > 1) ++multi;
          bool any_fired = false;
          for (const auto &[k, v] : t.scores) any_fired |= k.starts_with("dimension:") && v > 0;
          if (!any_fired) ++fallback;
        }
      }
    }
    // Causality: later utterances and all gold tags do not change earlier
    // predictions under predicted context.
    TagOptions opts;
    opts.context = ContextMode::kPredictedPrev;
    for (const auto &d : test) {
      const auto base = Tag(model, d, opts);
      for (size_t k = 0; k + 1 < d.utterances.size(); k += 2) {
        UnifiedDialogue changed = d;
        for (size_t j = 0; j < changed.utterances.size(); ++j) {
          Utterance &u = changed.utterances[j];
          u.mapped_tags = std::vector<DATag>{{Dimension::kSom, "Thanking"}};
          if (j > k) {
            u.normalized_text = "thank you very much goodbye";
            u.tokens = std::vector<TokenAnnotation>{};
          }
        }
        const auto after = Tag(model, changed, opts);
        for (size_t j = 0; j <= k; ++j) {
          if (after[j].predicted != base[j].predicted || after[j].scores != base[j].scores) {
            problems.push_back(d.dialogue_id + "/" + base[j].utterance_id +
                               " depends on later input or gold tags");
          }
        }
      }
    }
  }
  report.Check(problems.empty() && multi > 0, "tagger-invariants",
               std::to_string(utterances) + " tagged utterances, " + std::to_string(multi) +
                   " multidimensional, " + std::to_string(fallback) +
                   " by argmax fallback; causality under predicted context" +
                   (problems.empty() ? "" : "; " + problems.front()) +
                   (multi == 0 ? "; no utterance received tags in two dimensions" : ""));
}

// ---------------------------------------------------------------------------
// Reproduction criteria

struct Target {
  std::string table, row, column;
  double target = 0.0;
  double tolerance = 0.0;
  bool optional = false;
};

std::vector<Target> LoadTargets(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::vector<Target> out;
  std::string line;
  bool header = true;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, '\t');) f.push_back(cell);
    if (f.size() != 6) throw ParseError(path + ":" + std::to_string(n), "expected 6 columns");
    out.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4]), f[5] == "optional"});
  }
  return out;
}

class Corpora {
 public:
  Corpora(const Options &o, const Resources &r) : o_(o), r_(r) {}

  fs::path Root(Corpus c) const { return fs::path(o_.data_root) / Lower(CorpusName(c)); }
  std::string NotFound(Corpus c) const {
    return o_.data_root.empty() ? "no data root (set DA_DATA_ROOT or --data-root)"
                                : std::string(CorpusName(c)) + " not found at " +
                                      Root(c).string();
  }
  bool Present(Corpus c) const { return !o_.data_root.empty() && fs::is_directory(Root(c)); }
  fs::path Sidecar(Corpus c) const {
    return fs::path(o_.sidecars) / (Lower(CorpusName(c)) + ".conllu");
  }
  bool HasSidecar(Corpus c) const { return fs::exists(Sidecar(c)); }

  CorpusManifest Manifest(Corpus c) const {
    const fs::path p = fs::path(o_.manifests) / (Lower(CorpusName(c)) + ".json");
    return fs::exists(p) ? CorpusManifest::Load(p.string()) : CorpusManifest::Default(c);
  }

  DialogueCollection Raw(Corpus c) const {
    return LimitSwda(c, ReadCorpus(Manifest(c), Root(c).string()));
  }

  // Read, mapped (ISO mode), normalized, with the sidecar when present.
  const DialogueCollection &Prepared(Corpus c, bool map) {
    auto key = std::make_pair(c, map);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    PrepareOptions po;
    po.map = map;
    po.rules = &r_.rules;
    po.taxonomy = &r_.taxonomy;
    po.collapser = &r_.collapser;
    if (HasSidecar(c)) po.sidecar_path = Sidecar(c).string();
    return cache_[key] = PrepareCollection(Raw(c), po);
  }

  std::string Scale() const {
    return o_.swda_train_limit > 0
               ? " [desk-scale: " + std::to_string(o_.swda_train_limit) + " SWDA train dialogues]"
               : "";
  }

 private:
  // Keeps the first N training-split SWDA dialogues, leaving dev and test.
  DialogueCollection LimitSwda(Corpus c, DialogueCollection all) const {
    if (c != Corpus::kSwda || o_.swda_train_limit <= 0) return all;
    DialogueCollection out;
    int kept = 0;
    for (auto &d : all) {
      auto it = d.metadata.find(kMetaSplit);
      const bool train = it != d.metadata.end() && it->second == "train";
      if (train && kept >= o_.swda_train_limit) continue;
      kept += train;
      out.push_back(std::move(d));
    }
    return out;
  }

  const Options &o_;
  const Resources &r_;
  std::map<std::pair<Corpus, bool>, DialogueCollection> cache_;
};

// Reference category counts: corpus -> category -> accepted values.
std::map<std::string, std::map<std::string, std::vector<long>>> LoadTable2(
    const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::map<std::string, std::map<std::string, std::vector<long>>> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream s(line);
    std::string corpus, category, values;
    s >> corpus >> category >> values;
    std::istringstream v(values);
    for (std::string x; std::getline(v, x, '|');) out[corpus][category].push_back(std::stol(x));
  }
  return out;
}

void CheckTable2(Report &report, const Options &o, const Resources &r, Corpora &corpora) {
  const auto expected = LoadTable2(o.source_dir + "/data/expected/table2_counts.tsv");
  for (Corpus c : AllCorpora()) {
    if (c == Corpus::kCustom) continue;
    const std::string name(CorpusName(c));
    const std::string id = "table2-" + Lower(name);
    if (!corpora.Present(c)) {
      report.Skip(id, corpora.NotFound(c));
      continue;
    }
    Guard(report, id, [&] {
      DialogueCollection raw = corpora.Raw(c);
      auto [mapped, drops] = MapCorpus(raw, r.rules, r.taxonomy, &r.collapser);
      std::map<std::string, long> found;
      for (Level level : {Level::kDimension, Level::kTaskFunction, Level::kSomFunction}) {
        for (const auto &row : CorpusStats(mapped, level, r.taxonomy).rows) {
          found[row.category] = static_cast<long>(row.count);
        }
      }
      std::vector<std::string> wrong;
      const auto &want = expected.at(name);
      for (const auto &[category, values] : want) {
        const long got = found.count(category) ? found.at(category) : 0;
        if (std::find(values.begin(), values.end(), got) == values.end()) {
          wrong.push_back(category + " " + std::to_string(got) + " (expected " +
                          std::to_string(values.front()) + ")");
        }
      }
      std::string detail = std::to_string(want.size() - wrong.size()) + "/" +
                           std::to_string(want.size()) + " mapped counts match";
      for (size_t k = 0; k < wrong.size() && k < 4; ++k) detail += "; " + wrong[k];
      report.Check(wrong.empty(), id, detail + corpora.Scale());
    });
  }
}

void CompareCell(Report &report, const Target &t, const ResultTable &table,
                 const std::string &suffix) {
  const std::string id = t.table + " " + t.row + " @ " + t.column;
  auto v = table.Value(t.row, t.column);
  if (!v) {
    report.Fail(id, "no value produced");
    return;
  }
  const double pct = 100.0 * *v;
  report.Check(std::abs(pct - t.target) <= t.tolerance + 1e-9, id,
               Fmt(pct, 2) + " vs " + Fmt(t.target) + " +/- " + Fmt(t.tolerance) + suffix);
}

// Loads the embedding file, applying --emb-dim to the experiment's rows.
std::optional<EmbeddingTable> LoadEmbeddings(const Options &o, ExperimentConfig &cfg) {
  if (o.emb_dim > 0) {
    cfg.embedding_dim = o.emb_dim;
    for (auto &row : cfg.features) {
      if (row.features.use_embeddings) row.features.embedding_dim = o.emb_dim;
    }
    if (cfg.tune_features && cfg.tune_features->features.use_embeddings) {
      cfg.tune_features->features.embedding_dim = o.emb_dim;
    }
  }
  if (o.emb.empty() || !fs::exists(o.emb)) return std::nullopt;
  return EmbeddingTable::Load(o.emb, cfg.embedding_dim);
}

// Resources a feature row needs beyond the corpora; empty when satisfied.
std::string MissingFor(const FeatureConfig &f, bool have_emb, bool have_sidecars) {
  if (f.use_embeddings && !have_emb) return "needs the embedding file";
  if (f.NeedsTokens() && !have_sidecars) return "needs CoNLL-U sidecars";
  return "";
}

void CheckTable3(Report &report, const Options &o, const Resources &r, Corpora &corpora,
                 const std::vector<Target> &targets) {
  std::vector<Target> mine;
  for (const auto &t : targets) {
    if (t.table == "table3") mine.push_back(t);
  }
  auto skip_all = [&](const std::string &why) {
    for (const auto &t : mine) report.Skip(t.table + " " + t.row + " @ " + t.column, why);
    report.Skip("c-tuning", why);
  };
  if (!corpora.Present(Corpus::kSwda)) {
    skip_all(corpora.NotFound(Corpus::kSwda));
    return;
  }
  ExperimentConfig cfg = ExperimentConfig::Load(o.source_dir + "/experiments/table3.json");
  std::optional<EmbeddingTable> emb = LoadEmbeddings(o, cfg);
  const bool sidecars = corpora.HasSidecar(Corpus::kSwda);

  // Only the rows with reference targets, minus those lacking resources.
  std::vector<FeatureRow> rows;
  std::map<std::string, std::string> skipped;
  for (const auto &row : cfg.features) {
    bool wanted = false;
    for (const auto &t : mine) wanted |= t.row == row.name;
    if (!wanted) continue;
    const std::string missing = MissingFor(row.features, emb.has_value(), sidecars);
    if (missing.empty()) {
      rows.push_back(row);
    } else {
      skipped[row.name] = missing;
    }
  }
  cfg.features = rows;
  if (cfg.features.empty()) {
    skip_all("no runnable feature rows");
    return;
  }

  ResultTable table;
  try {
    ExperimentData data;
    data.taxonomy = &r.taxonomy;
    data.collapser = &r.collapser;
    data.embeddings = emb ? &*emb : nullptr;
    data.corpora[Corpus::kSwda] = corpora.Prepared(Corpus::kSwda, false);
    table = RunExperiment(cfg, data);
  } catch (const std::exception &e) {
    for (const auto &t : mine) {
      report.Fail(t.table + " " + t.row + " @ " + t.column, std::string("error: ") + e.what());
    }
    report.Fail("c-tuning", std::string("error: ") + e.what());
    return;
  }
  for (const auto &t : mine) {
    auto it = skipped.find(t.row);
    if (it != skipped.end()) {
      report.Skip(t.table + " " + t.row + " @ " + t.column, it->second);
    } else {
      CompareCell(report, t, table, corpora.Scale());
    }
  }

  double dev01 = NAN, dev1 = NAN;
  for (const auto &[C, acc] : table.tuning) {
    if (C == 0.1) dev01 = 100.0 * acc;
    if (C == 1.0) dev1 = 100.0 * acc;
  }
  if (std::isnan(dev01) || std::isnan(dev1)) {
    report.Fail("c-tuning", "the dev split was not evaluated at C = 0.1 and C = 1.0");
  } else {
    report.Check(dev01 - dev1 >= 1.0, "c-tuning",
                 "1-2-grams+PREV dev accuracy " + Fmt(dev01, 2) + " at C=0.1 vs " +
                     Fmt(dev1, 2) + " at C=1.0 (difference " + Fmt(dev01 - dev1, 2) +
                     ", need >= 1.0)" + corpora.Scale());
  }
}

void CheckTables56(Report &report, const Options &o, const Resources &r, Corpora &corpora,
                   const std::vector<Target> &targets) {
  std::vector<Target> mine;
  for (const auto &t : targets) {
    if (t.table == "table5") mine.push_back(t);
  }
  auto id_of = [](const Target &t) { return "tables5-6 ALL/" + t.row + " @ " + t.column; };
  ExperimentConfig cfg = ExperimentConfig::Load(o.source_dir + "/experiments/table5.json");
  std::vector<FeatureRow> rows;
  for (const auto &row : cfg.features) {
    for (const auto &t : mine) {
      if (t.row == row.name) {
        rows.push_back(row);
        break;
      }
    }
  }
  cfg.features = rows;
  cfg.majority_baseline = false;

  std::string missing;
  for (Corpus c : cfg.train_corpora) {
    if (!missing.empty()) break;
    if (!corpora.Present(c)) {
      missing = corpora.NotFound(c);
    } else if (cfg.NeedsSidecars() && !corpora.HasSidecar(c)) {
      missing = "no CoNLL-U sidecar for " + std::string(CorpusName(c));
    }
  }
  // Test sets whose corpus is absent are dropped; required ones skip all.
  std::vector<TestSetSpec> present;
  std::set<std::string> absent;
  for (const auto &t : cfg.test_sets) {
    if (corpora.Present(t.corpus) &&
        (!cfg.NeedsSidecars() || corpora.HasSidecar(t.corpus))) {
      present.push_back(t);
    } else {
      absent.insert(t.name);
    }
  }
  for (const auto &t : mine) {
    if (missing.empty() && !t.optional && absent.count(t.column)) {
      missing = "test corpus or sidecar for " + t.column + " not found";
    }
  }
  if (!missing.empty() || cfg.features.empty()) {
    for (const auto &t : mine) report.Skip(id_of(t), missing.empty() ? "no target rows" : missing);
    return;
  }
  cfg.test_sets = present;

  ResultTable table;
  try {
    ExperimentData data;
    data.taxonomy = &r.taxonomy;
    data.collapser = &r.collapser;
    for (Corpus c : cfg.RequiredCorpora()) data.corpora[c] = corpora.Prepared(c, true);
    table = RunExperiment(cfg, data);
  } catch (const std::exception &e) {
    for (const auto &t : mine) report.Fail(id_of(t), std::string("error: ") + e.what());
    return;
  }
  for (const auto &t : mine) {
    if (absent.count(t.column)) {
      report.Skip(id_of(t), "optional test corpus not found");
      continue;
    }
    Target shown = t;
    shown.table = "tables5-6";
    shown.row = "ALL/" + t.row;
    ResultTable renamed = table;
    for (auto &row : renamed.rows) {
      if (row == t.row) row = shown.row;
    }
    CompareCell(report, shown, renamed, corpora.Scale());
  }
}

int Run(int argc, char **argv) {
  Options o;
  CLI::App app{"Acceptance criteria: one PASS/FAIL/SKIP line each"};
  app.add_option("--data-root", o.data_root,
                 "directory with one subdirectory per corpus (default: $DA_DATA_ROOT)");
  app.add_option("--manifests", o.manifests, "corpus manifest directory");
  app.add_option("--sidecars", o.sidecars,
                 "directory of <corpus>.conllu files (default: <data-root>/sidecars)");
  app.add_option("--emb", o.emb, "word-embedding file (default: <data-root>/embeddings.txt)");
  app.add_option("--emb-dim", o.emb_dim, "embedding dimension (default: the experiment's)");
  app.add_option("--swda-train-limit", o.swda_train_limit,
                 "use only the first N SWDA training dialogues (desk-scale smoke runs)");
  app.add_option("--source-dir", o.source_dir, "source tree with data/ and experiments/");
  app.add_option("--da", o.da, "da binary used by the determinism check");
  app.add_option("--jobs", o.jobs, "worker threads (default: all cores)");
  app.add_flag("--skip-property", o.skip_property, "skip the property criteria");
  app.add_flag("--skip-reproduction", o.skip_reproduction, "skip the reproduction criteria");
  app.add_flag("--report-only", o.report_only, "exit 0 even when criteria fail");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (o.jobs > 0) omp_set_num_threads(o.jobs);
  if (o.data_root.empty()) {
    if (const char *env = std::getenv("DA_DATA_ROOT")) o.data_root = env;
  }
  if (o.manifests.empty()) o.manifests = o.source_dir + "/data/manifests";
  if (o.sidecars.empty() && !o.data_root.empty()) o.sidecars = o.data_root + "/sidecars";
  if (o.emb.empty() && !o.data_root.empty()) o.emb = o.data_root + "/embeddings.txt";

  Report report;
  const Resources resources(o.source_dir);
  if (!o.skip_property) {
    const auto start = std::chrono::steady_clock::now();
    Guard(report, "svm-oracle", [&] { CheckSvm(report); });
    Guard(report, "normalization", [&] { CheckNormalization(report); });
    Guard(report, "mapping-integrity", [&] { CheckMapping(report, o, resources); });
    Guard(report, "mcnemar-kappa", [&] { CheckSignificance(report); });
    Guard(report, "determinism", [&] { CheckDeterminism(report, o); });
    Guard(report, "tagger-invariants", [&] { CheckTagger(report, o, resources); });
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.Check(secs < 300.0, "property-suite-time", Fmt(secs) + " s (limit 300 s)");
  }
  if (!o.skip_reproduction) {
    Corpora corpora(o, resources);
    const auto targets = LoadTargets(o.source_dir + "/data/expected/reproduction.tsv");
    Guard(report, "table2", [&] { CheckTable2(report, o, resources, corpora); });
    Guard(report, "table3", [&] { CheckTable3(report, o, resources, corpora, targets); });
    Guard(report, "tables5-6", [&] { CheckTables56(report, o, resources, corpora, targets); });
  }
  std::cout << report.failures() << " failed" << std::endl;
  return report.failures() == 0 || o.report_only ? 0 : 1;
}

}  // namespace
}  // namespace datag

int main(int argc, char **argv) {
  try {
    return datag::Run(argc, argv);
  } catch (const std::exception &e) {
    std::cerr << "acceptance: " << e.what() << std::endl;
    return 2;
  }
}
