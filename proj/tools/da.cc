// da: command-line front end of the dialogue-act toolkit.
//
//   da ingest --corpus swda --root ./swda --out swda.jsonl
//   da map --in swda.jsonl --out swda.mapped.jsonl
//   da reproduce-table 3 --swda ./swda --emb ./vectors.txt --out results/
//
// Exit codes: 0 success, 1 usage, 2 data or format, 3 integrity.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "datag/dialogue.h"
#include "datag/errors.h"
#include "datag/experiments.h"
#include "datag/features.h"
#include "datag/ingest.h"
#include "datag/linear_model.h"
#include "datag/metrics.h"
#include "datag/preprocess.h"
#include "datag/schema_map.h"
#include "datag/tagger.h"
#include "datag/taxonomy.h"

#ifndef DATAG_DEFAULT_DATA_DIR
#define DATAG_DEFAULT_DATA_DIR "data"
#endif
#ifndef DATAG_DEFAULT_EXPERIMENTS_DIR
#define DATAG_DEFAULT_EXPERIMENTS_DIR "experiments"
#endif

namespace fs = std::filesystem;

namespace datag {
namespace {

struct Options {
  // Global.
  std::string data_dir = DATAG_DEFAULT_DATA_DIR;
  std::string experiments_dir = DATAG_DEFAULT_EXPERIMENTS_DIR;
  std::string manifests_dir;
  int jobs = 0;
  bool verbose = false;

  // Corpus roots by corpus.
  std::map<Corpus, std::string> roots;

  // Shared per-command values.
  std::string corpus;
  std::string root;
  std::string manifest;
  std::string in;
  std::vector<std::string> inputs;
  std::string dev;
  std::string out;
  std::string report;
  std::string rules_dir;
  std::string taxonomy_path;
  std::string level = "dimension";
  std::string sidecar;
  std::string sidecars_dir;
  std::string emb;
  int emb_dim = 300;
  std::string mode = "ISO_SUBSET";
  std::string features = "1-2-grams+PREV";
  double C = 0.1;
  uint64_t seed = 1;
  double tolerance = 1e-3;
  int max_iter = 1000;
  std::string grid = "10,1,0.1,0.01,0.001";
  std::string model_dir;
  std::string context = "gold_prev";
  std::vector<std::string> speakers;
  bool allow_missing_classes = false;
  bool fail_on_misaligned = false;
  std::string config;
  int table = 0;
  NormalizationConfig norm;
  bool no_lowercase = false;
  bool no_preserve_I = false;
  bool no_apostrophes = false;
  bool no_strip_special = false;
};

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string DataPath(const Options &o, const std::string &rel) {
  return (fs::path(o.data_dir) / rel).string();
}

Taxonomy LoadTaxonomy(const Options &o) {
  return Taxonomy::Load(o.taxonomy_path.empty() ? DataPath(o, "taxonomy.tsv")
                                                : o.taxonomy_path);
}

SwdaCollapser LoadCollapser(const Options &o) {
  return SwdaCollapser::Load(DataPath(o, "ws97_collapse.tsv"));
}

RuleSet LoadRules(const Options &o, const Taxonomy &taxonomy) {
  return RuleSet::LoadDirectory(o.rules_dir.empty() ? DataPath(o, "rules") : o.rules_dir,
                                taxonomy);
}

std::string ManifestsDir(const Options &o) {
  return o.manifests_dir.empty() ? DataPath(o, "manifests") : o.manifests_dir;
}

CorpusManifest ManifestFor(const Options &o, Corpus corpus) {
  fs::path p = fs::path(ManifestsDir(o)) / (Lower(CorpusName(corpus)) + ".json");
  if (fs::exists(p)) return CorpusManifest::Load(p.string());
  spdlog::debug("no manifest at {}; using built-in defaults", p.string());
  return CorpusManifest::Default(corpus);
}

// Explicit flag, then $DA_DATA_ROOT/<corpus>.
std::optional<std::string> RootFor(const Options &o, Corpus corpus) {
  auto it = o.roots.find(corpus);
  if (it != o.roots.end() && !it->second.empty()) return it->second;
  if (const char *env = std::getenv("DA_DATA_ROOT")) {
    fs::path p = fs::path(env) / Lower(CorpusName(corpus));
    if (fs::is_directory(p)) return p.string();
  }
  return std::nullopt;
}

void RequireReadable(const std::string &path, const char *what) {
  if (!fs::exists(path)) throw IoError(path, std::string(what) + " not found");
}

void EnsureParent(const std::string &path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void WriteText(const std::string &path, const std::string &text) {
  EnsureParent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

std::optional<EmbeddingTable> LoadEmbeddings(const Options &o) {
  if (o.emb.empty()) return std::nullopt;
  RequireReadable(o.emb, "embedding file");
  spdlog::info("loading embeddings from {}", o.emb);
  return EmbeddingTable::Load(o.emb, o.emb_dim);
}

FeatureConfig ParseFeatures(const Options &o) {
  FeatureConfig f = FeatureConfig::Parse(o.features);
  if (f.use_embeddings) f.embedding_dim = o.emb_dim;
  return f;
}

TrainConfig ParseTrainConfig(const Options &o) {
  TrainConfig t;
  t.C = o.C;
  t.seed = o.seed;
  t.tolerance = o.tolerance;
  t.max_outer_iterations = o.max_iter;
  t.Validate();
  return t;
}

DialogueCollection ReadInputs(const std::vector<std::string> &paths,
                              const std::string &sidecar) {
  DialogueCollection all;
  for (const auto &p : paths) {
    RequireReadable(p, "input file");
    DialogueCollection part = ReadDialogues(p);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  if (!sidecar.empty()) {
    RequireReadable(sidecar, "sidecar file");
    AlignmentReport r = AttachAnnotations(all, LoadConllu(sidecar));
    spdlog::info("sidecar: {} aligned, {} failed, {} missing", r.aligned, r.failed,
                 r.missing);
  }
  return all;
}

// ---------------------------------------------------------------------------
// Subcommands

int RunIngest(const Options &o) {
  Corpus corpus = ParseCorpus(o.corpus);
  std::string root = o.root;
  if (root.empty()) {
    auto r = RootFor(o, corpus);
    if (!r) throw UsageError("no --root given and DA_DATA_ROOT has no " +
                             Lower(CorpusName(corpus)) + " directory");
    root = *r;
  }
  RequireReadable(root, "corpus root");
  CorpusManifest m = o.manifest.empty() ? ManifestFor(o, corpus)
                                        : CorpusManifest::Load(o.manifest);
  if (m.corpus != corpus) throw UsageError("manifest is for a different corpus");
  DialogueCollection d = ReadCorpus(m, root);
  WriteDialogues(o.out, d);
  spdlog::info("ingested {} dialogues, {} utterances from {}", d.size(),
               CountUtterances(d), root);
  return 0;
}

int RunMap(const Options &o) {
  Taxonomy taxonomy = LoadTaxonomy(o);
  RuleSet rules = LoadRules(o, taxonomy);
  SwdaCollapser collapser = LoadCollapser(o);
  DialogueCollection in = ReadInputs({o.in}, "");
  auto [mapped, report] = MapCorpus(in, rules, taxonomy, &collapser);
  WriteDialogues(o.out, mapped);
  if (!o.report.empty()) WriteText(o.report, report.ToTsv());
  for (const auto &[corpus, s] : report.per_corpus) {
    spdlog::info("{}: {} ingested, {} retained ({:.2f}%), {} dropped", CorpusName(corpus),
                 s.ingested, s.retained, s.RetainedPercent(), s.dropped);
  }
  return 0;
}

int RunStats(const Options &o) {
  Taxonomy taxonomy = LoadTaxonomy(o);
  DialogueCollection in = ReadInputs({o.in}, "");
  StatReport r = CorpusStats(in, ParseLevel(o.level), taxonomy);
  if (o.out.empty()) {
    std::cout << r.ToTsv();
  } else {
    WriteText(o.out, r.ToTsv());
  }
  return 0;
}

int RunPreprocess(const Options &o) {
  NormalizationConfig cfg;
  cfg.lowercase = !o.no_lowercase;
  cfg.preserve_I = !o.no_preserve_I;
  cfg.keep_apostrophes = !o.no_apostrophes;
  cfg.strip_special = !o.no_strip_special;
  DialogueCollection d = ReadInputs({o.in}, "");
  NormalizeCollection(d, cfg);
  size_t dropped = DropEmpty(d);
  WriteDialogues(o.out, d);
  spdlog::info("normalized {} utterances, dropped {} empty", CountUtterances(d), dropped);
  return 0;
}

int RunAnnotateCheck(const Options &o) {
  DialogueCollection d = ReadInputs({o.in}, "");
  AlignmentReport r = AttachAnnotations(d, LoadConllu(o.sidecar));
  std::cout << "aligned\t" << r.aligned << "\nfailed\t" << r.failed << "\nmissing\t"
            << r.missing << '\n';
  for (const auto &id : r.failed_ids) std::cout << "failed_id\t" << id << '\n';
  if (!o.emb.empty()) {
    auto emb = LoadEmbeddings(o);
    std::cout << "embeddings\t" << emb->size() << "\ndim\t" << emb->dim() << '\n';
  }
  if (o.fail_on_misaligned && (r.failed > 0 || r.missing > 0)) {
    throw ValidationError(std::to_string(r.failed + r.missing) +
                          " utterances without aligned annotations");
  }
  return 0;
}

int RunTrain(const Options &o) {
  Taxonomy taxonomy = LoadTaxonomy(o);
  SwdaCollapser collapser = LoadCollapser(o);
  auto emb = LoadEmbeddings(o);
  TaggerConfig tc;
  tc.mode = ParseTaggerMode(o.mode);
  tc.features = ParseFeatures(o);
  tc.train = ParseTrainConfig(o);
  tc.require_all_classes = !o.allow_missing_classes;
  DialogueCollection train = ReadInputs(o.inputs, o.sidecar);
  TagOptions opts;
  opts.embeddings = emb ? &*emb : nullptr;
  opts.collapser = &collapser;
  spdlog::info("training {} model ({}) on {} utterances", TaggerModeName(tc.mode),
               tc.features.Name(), CountUtterances(train));
  TaggerModel m = TrainTagger(train, tc, taxonomy, opts);
  m.Save(o.model_dir);
  spdlog::info("model written to {} ({} features)", o.model_dir, m.vocab->size());
  return 0;
}

int RunTune(const Options &o) {
  Taxonomy taxonomy = LoadTaxonomy(o);
  SwdaCollapser collapser = LoadCollapser(o);
  auto emb = LoadEmbeddings(o);
  std::vector<double> grid;
  std::stringstream ss(o.grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      grid.push_back(std::stod(item));
    } catch (const std::exception &) {
      throw UsageError("bad grid value '" + item + "'");
    }
  }
  if (grid.empty()) throw UsageError("empty C grid");
  DialogueCollection train = ReadInputs(o.inputs, o.sidecar);
  DialogueCollection dev = ReadInputs({o.dev}, o.sidecar);
  TaggerConfig tc;
  tc.mode = ParseTaggerMode(o.mode);
  tc.features = ParseFeatures(o);
  tc.train = ParseTrainConfig(o);
  tc.require_all_classes = !o.allow_missing_classes;
  TagOptions opts;
  opts.embeddings = emb ? &*emb : nullptr;
  opts.collapser = &collapser;
  TestSetSpec spec{"dev", Corpus::kCustom, std::nullopt, {}};
  double best_C = 0;
  double best_acc = -1;
  std::cout << "C\tdev_accuracy\n";
  for (double C : grid) {
    tc.train.C = C;
    TaggerModel m = TrainTagger(train, tc, taxonomy, opts);
    LabelPairs p = EvaluateOn(m, dev, spec, opts);
    double acc = Accuracy(p.predicted, p.gold);
    std::cout << C << '\t' << 100.0 * acc << '\n';
    if (acc > best_acc || (acc == best_acc && C < best_C)) {
      best_acc = acc;
      best_C = C;
    }
  }
  std::cout << "best_C\t" << best_C << '\n';
  return 0;
}

int RunTag(const Options &o) {
  TaggerModel m = TaggerModel::Load(o.model_dir);
  SwdaCollapser collapser = LoadCollapser(o);
  auto emb = LoadEmbeddings(o);
  DialogueCollection d = ReadInputs({o.in}, o.sidecar);
  TagOptions opts;
  opts.context = ParseContextMode(o.context);
  opts.embeddings = emb ? &*emb : nullptr;
  opts.collapser = &collapser;
  auto tagged = TagCollection(m, d, opts);
  std::ostringstream out;
  WriteTagged(out, tagged);
  if (o.out.empty()) {
    std::cout << out.str();
  } else {
    WriteText(o.out, out.str());
  }
  return 0;
}

int RunEval(const Options &o) {
  TaggerModel m = TaggerModel::Load(o.model_dir);
  SwdaCollapser collapser = LoadCollapser(o);
  auto emb = LoadEmbeddings(o);
  DialogueCollection d = ReadInputs({o.in}, o.sidecar);
  TagOptions opts;
  opts.context = ParseContextMode(o.context);
  opts.embeddings = emb ? &*emb : nullptr;
  opts.collapser = &collapser;
  EvalFilter filter;
  filter.speakers.insert(o.speakers.begin(), o.speakers.end());
  std::ostringstream out;
  char buf[64];
  auto pct = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
    return std::string(buf);
  };
  if (m.mode == TaggerMode::kSwda42) {
    LabelPairs p = EvaluateFlat(m, d, opts, filter);
    out << "metric\tvalue\nn\t" << p.gold.size() << "\naccuracy\t"
        << pct(Accuracy(p.predicted, p.gold)) << '\n';
    out << "class\tprecision\trecall\tgold\n";
    for (const auto &[label, s] : PerClassScores(p.predicted, p.gold)) {
      out << label << '\t' << pct(s.precision()) << '\t' << pct(s.recall()) << '\t'
          << s.gold << '\n';
    }
  } else {
    DimensionReport r = EvaluateDimensions(m, d, opts, filter);
    out << "dimension\taccuracy\tn\n";
    for (const auto &s : r.dimensions) {
      out << DimensionName(s.dimension) << '\t' << pct(s.accuracy()) << '\t' << s.total
          << '\n';
    }
    out << "overall_micro\t" << pct(r.micro) << "\noverall_macro\t" << pct(r.macro) << '\n';
    out << "function_dimension\taccuracy\tn\n";
    for (const auto &[dim, p] : EvaluateFunctionsGoldDims(m, d, opts, filter)) {
      if (p.gold.empty()) continue;
      out << DimensionName(dim) << '\t' << pct(Accuracy(p.predicted, p.gold)) << '\t'
          << p.gold.size() << '\n';
    }
  }
  if (o.out.empty()) {
    std::cout << out.str();
  } else {
    WriteText(o.out, out.str());
  }
  return 0;
}

// Loads every corpus an experiment needs.
ExperimentData LoadExperimentData(const Options &o, const ExperimentConfig &cfg,
                                  const Taxonomy &taxonomy, const RuleSet &rules,
                                  const SwdaCollapser &collapser,
                                  const EmbeddingTable *embeddings) {
  ExperimentData data;
  data.taxonomy = &taxonomy;
  data.collapser = &collapser;
  data.embeddings = embeddings;
  if (cfg.NeedsEmbeddings() && embeddings == nullptr) {
    throw UsageError("experiment " + cfg.name + " needs --emb");
  }
  for (Corpus c : cfg.RequiredCorpora()) {
    auto root = RootFor(o, c);
    if (!root) {
      throw UsageError("experiment " + cfg.name + " needs corpus " +
                       std::string(CorpusName(c)) + " (--" + Lower(CorpusName(c)) +
                       " or DA_DATA_ROOT)");
    }
    PrepareOptions po;
    po.map = cfg.mode == TaggerMode::kIsoSubset;
    po.rules = &rules;
    po.taxonomy = &taxonomy;
    po.collapser = &collapser;
    if (cfg.NeedsSidecars()) {
      if (o.sidecars_dir.empty()) {
        throw UsageError("experiment " + cfg.name + " needs --sidecars");
      }
      fs::path sc = fs::path(o.sidecars_dir) / (Lower(CorpusName(c)) + ".conllu");
      RequireReadable(sc.string(), "sidecar file");
      po.sidecar_path = sc.string();
    }
    PrepareReport report;
    data.corpora[c] = PrepareCorpus(ManifestFor(o, c), *root, po, &report);
    spdlog::info("{}: {} ingested, {} dropped by mapping, {} empty, {} kept",
                 CorpusName(c), report.ingested, report.dropped_by_mapping,
                 report.dropped_empty, CountUtterances(data.corpora[c]));
    if (report.alignment) {
      spdlog::info("{}: sidecar aligned {}, failed {}, missing {}", CorpusName(c),
                   report.alignment->aligned, report.alignment->failed,
                   report.alignment->missing);
    }
  }
  return data;
}

int RunConfiguredExperiment(const Options &o, const ExperimentConfig &cfg) {
  Taxonomy taxonomy = LoadTaxonomy(o);
  RuleSet rules = LoadRules(o, taxonomy);
  SwdaCollapser collapser = LoadCollapser(o);
  Options eo = o;
  if (cfg.embedding_dim > 0) eo.emb_dim = cfg.embedding_dim;
  auto emb = cfg.NeedsEmbeddings() ? LoadEmbeddings(eo) : std::nullopt;
  ExperimentData data =
      LoadExperimentData(o, cfg, taxonomy, rules, collapser, emb ? &*emb : nullptr);
  spdlog::info("running {} ({})", cfg.name, cfg.title);
  ResultTable table = RunExperiment(cfg, data);
  const fs::path out = o.out.empty() ? fs::path(".") : fs::path(o.out);
  WriteText((out / (cfg.name + ".tsv")).string(), table.ToTsv());
  WriteText((out / (cfg.name + ".significance.tsv")).string(), table.SignificanceTsv());
  WriteText((out / (cfg.name + ".txt")).string(), table.Render());
  std::cout << table.Render();
  return 0;
}

int RunAblate(const Options &o) {
  ExperimentConfig cfg = ExperimentConfig::Load(o.config);
  if (cfg.kind != ExperimentKind::kAblation) {
    throw UsageError(o.config + " is not an ablation experiment");
  }
  return RunConfiguredExperiment(o, cfg);
}

int RunReproduce(const Options &o) {
  std::string path = o.config;
  if (path.empty()) {
    if (o.table < 3 || o.table > 6) throw UsageError("table must be 3, 4, 5 or 6");
    path = (fs::path(o.experiments_dir) / ("table" + std::to_string(o.table) + ".json"))
               .string();
  }
  RequireReadable(path, "experiment config");
  return RunConfiguredExperiment(o, ExperimentConfig::Load(path));
}

void AddCorpusRoots(CLI::App *cmd, Options &o) {
  for (Corpus c : AllCorpora()) {
    if (c == Corpus::kCustom) continue;
    std::string name = Lower(CorpusName(c));
    std::erase(name, '-');
    cmd->add_option("--" + name, o.roots[c], "root directory of " +
                                                  std::string(CorpusName(c)));
  }
}

void AddResources(CLI::App *cmd, Options &o) {
  cmd->add_option("--emb", o.emb, "word-embedding text file");
  cmd->add_option("--emb-dim", o.emb_dim, "embedding dimension")->capture_default_str();
}

void AddTraining(CLI::App *cmd, Options &o) {
  cmd->add_option("--mode", o.mode, "SWDA42 or ISO_SUBSET")->capture_default_str();
  cmd->add_option("--features", o.features, "feature spec, e.g. 1-2-grams+PREV+I-POS")
      ->capture_default_str();
  cmd->add_option("--C", o.C, "SVM regularization trade-off")->capture_default_str();
  cmd->add_option("--seed", o.seed, "permutation seed")->capture_default_str();
  cmd->add_option("--tolerance", o.tolerance, "stopping tolerance")->capture_default_str();
  cmd->add_option("--max-iter", o.max_iter, "outer iteration cap")->capture_default_str();
  cmd->add_option("--sidecar", o.sidecar, "CoNLL-U sidecar for the inputs");
  cmd->add_flag("--allow-missing-classes", o.allow_missing_classes,
                "train function models on the classes present");
  AddResources(cmd, o);
}

}  // namespace
}  // namespace datag

int main(int argc, char **argv) {
  using namespace datag;
  Options o;
  CLI::App app{"Dialogue-act corpus toolkit and ISO-subset tagger", "da"};
  app.require_subcommand(1);
  app.add_option("--data-dir", o.data_dir, "resource directory (taxonomy, rules, manifests)")
      ->capture_default_str();
  app.add_option("--experiments", o.experiments_dir, "experiment config directory")
      ->capture_default_str();
  app.add_option("--manifests", o.manifests_dir, "corpus manifest directory");
  app.add_option("--jobs", o.jobs, "worker threads (default: all cores)");
  app.add_flag("-v,--verbose", o.verbose, "debug logging");

  auto *ingest = app.add_subcommand("ingest", "read a corpus in its native format");
  ingest->add_option("--corpus", o.corpus, "corpus name")->required();
  ingest->add_option("--root", o.root, "corpus root directory");
  ingest->add_option("--manifest", o.manifest, "corpus manifest JSON");
  ingest->add_option("--out", o.out, "unified JSONL output")->required();

  auto *map = app.add_subcommand("map", "map source tags onto the ISO subset");
  map->add_option("--in", o.in, "unified JSONL input")->required();
  map->add_option("--out", o.out, "mapped JSONL output")->required();
  map->add_option("--report", o.report, "drop report TSV");
  map->add_option("--rules", o.rules_dir, "rule table directory");
  map->add_option("--taxonomy", o.taxonomy_path, "taxonomy TSV");

  auto *stats = app.add_subcommand("stats", "category counts of mapped dialogues");
  stats->add_option("--in", o.in, "mapped JSONL input")->required();
  stats->add_option("--level", o.level, "dimension, task_function, som_function, feedback")
      ->capture_default_str();
  stats->add_option("--out", o.out, "TSV output (default stdout)");
  stats->add_option("--taxonomy", o.taxonomy_path, "taxonomy TSV");

  auto *pre = app.add_subcommand("preprocess", "normalize utterance text");
  pre->add_option("--in", o.in, "JSONL input")->required();
  pre->add_option("--out", o.out, "JSONL output")->required();
  pre->add_flag("--no-lowercase", o.no_lowercase, "keep case");
  pre->add_flag("--no-preserve-I", o.no_preserve_I, "lowercase the pronoun I too");
  pre->add_flag("--no-apostrophes", o.no_apostrophes, "drop apostrophes");
  pre->add_flag("--no-strip-special", o.no_strip_special, "keep special characters");

  auto *check = app.add_subcommand("annotate-check", "validate sidecars and embeddings");
  check->add_option("--in", o.in, "normalized JSONL input")->required();
  check->add_option("--sidecar", o.sidecar, "CoNLL-U sidecar")->required();
  check->add_flag("--fail-on-misaligned", o.fail_on_misaligned,
                  "exit 2 when any utterance lacks aligned annotations");
  AddResources(check, o);

  auto *train = app.add_subcommand("train", "train a tagger model bundle");
  train->add_option("--train", o.inputs, "training JSONL files")->required();
  train->add_option("--model", o.model_dir, "output model directory")->required();
  AddTraining(train, o);

  auto *tune = app.add_subcommand("tune", "pick C on a development set");
  tune->add_option("--train", o.inputs, "training JSONL files")->required();
  tune->add_option("--dev", o.dev, "development JSONL")->required();
  tune->add_option("--grid", o.grid, "comma-separated C values")->capture_default_str();
  AddTraining(tune, o);

  auto *tag = app.add_subcommand("tag", "tag dialogues with a trained model");
  tag->add_option("--model", o.model_dir, "model directory")->required();
  tag->add_option("--in", o.in, "JSONL input")->required();
  tag->add_option("--out", o.out, "tagged JSONL output (default stdout)");
  tag->add_option("--context", o.context, "gold_prev or predicted_prev")
      ->capture_default_str();
  tag->add_option("--sidecar", o.sidecar, "CoNLL-U sidecar for the input");
  AddResources(tag, o);

  auto *eval = app.add_subcommand("eval", "evaluate a model on labelled dialogues");
  eval->add_option("--model", o.model_dir, "model directory")->required();
  eval->add_option("--in", o.in, "JSONL input")->required();
  eval->add_option("--out", o.out, "TSV report (default stdout)");
  eval->add_option("--context", o.context, "gold_prev or predicted_prev")
      ->capture_default_str();
  eval->add_option("--speakers", o.speakers, "only score these speakers' turns");
  eval->add_option("--sidecar", o.sidecar, "CoNLL-U sidecar for the input");
  AddResources(eval, o);

  auto *ablate = app.add_subcommand("ablate", "run a corpus-ablation experiment");
  ablate->add_option("--config", o.config, "ablation experiment JSON")->required();
  ablate->add_option("--out", o.out, "output directory");
  ablate->add_option("--sidecars", o.sidecars_dir, "directory of <corpus>.conllu files");
  AddCorpusRoots(ablate, o);
  AddResources(ablate, o);

  auto *repro = app.add_subcommand("reproduce-table", "regenerate a results table");
  repro->add_option("table", o.table, "3, 4, 5 or 6");
  repro->add_option("--config", o.config, "experiment JSON (overrides the table number)");
  repro->add_option("--out", o.out, "output directory");
  repro->add_option("--sidecars", o.sidecars_dir, "directory of <corpus>.conllu files");
  AddCorpusRoots(repro, o);
  AddResources(repro, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }

  auto logger = spdlog::stderr_color_mt("da");
  spdlog::set_default_logger(logger);
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);
  if (o.jobs > 0) omp_set_num_threads(o.jobs);

  try {
    if (*ingest) return RunIngest(o);
    if (*map) return RunMap(o);
    if (*stats) return RunStats(o);
    if (*pre) return RunPreprocess(o);
    if (*check) return RunAnnotateCheck(o);
    if (*train) return RunTrain(o);
    if (*tune) return RunTune(o);
    if (*tag) return RunTag(o);
    if (*eval) return RunEval(o);
    if (*ablate) return RunAblate(o);
    if (*repro) return RunReproduce(o);
  } catch (const IntegrityError &e) {
    spdlog::error("integrity: {}", e.what());
    return 3;
  } catch (const UsageError &e) {
    spdlog::error("usage: {}", e.what());
    return 1;
  } catch (const DataError &e) {
    spdlog::error("data: {}", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error &e) {
    spdlog::error("data: {}", e.what());
    return 2;
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}
