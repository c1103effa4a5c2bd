#include "datag/tagger.h"

#include <algorithm>
#include <cctype>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "datag/errors.h"
#include "json.hpp"

namespace datag {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr char kBundleFormat[] = "datag-tagger";
constexpr int kBundleVersion = 1;
constexpr char kFeedbackNode[] = "Feedback";

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string Key(const UnifiedDialogue &d, const Utterance &u) {
  return d.dialogue_id + "/" + u.utterance_id;
}

WeightLayout LayoutFor(const TaggerModel &m) {
  WeightLayout l;
  l.num_sparse = m.vocab ? m.vocab->size() : 0;
  l.dense_dim = m.features.use_embeddings ? m.features.embedding_dim : 0;
  return l;
}

void CheckEmbeddings(const FeatureConfig &f, const TagOptions &opts) {
  if (!f.use_embeddings) return;
  if (opts.embeddings == nullptr) {
    throw ConfigError("feature set " + f.Name() + " needs an embedding table");
  }
  if (opts.embeddings->dim() != f.embedding_dim) {
    throw DimensionError("embedding table has dimension " +
                         std::to_string(opts.embeddings->dim()) + ", model expects " +
                         std::to_string(f.embedding_dim));
  }
}

// Binary decisions and function labels for one utterance.
TaggedUtterance Decide(const TaggerModel &model, const UnifiedDialogue &d,
                       const Utterance &u, const FeatureVector &x) {
  TaggedUtterance t;
  t.dialogue_id = d.dialogue_id;
  t.utterance_id = u.utterance_id;
  t.speaker = u.speaker;
  if (model.mode == TaggerMode::kSwda42) {
    Prediction p = Predict(*model.swda_model, x);
    t.label = p.label;
    for (size_t c = 0; c < p.scores.size(); ++c) {
      t.scores[model.swda_model->classes[c]] = p.scores[c];
    }
    return t;
  }
  std::vector<std::pair<Dimension, double>> dims;
  for (const auto &[dim, det] : model.dimension_models) {
    double s = det.Score(x, 0);
    t.scores["dimension:" + std::string(DimensionName(dim))] = s;
    dims.emplace_back(dim, s);
  }
  std::vector<Dimension> fired;
  for (const auto &[dim, s] : dims) {
    if (s > 0) fired.push_back(dim);
  }
  if (fired.empty()) {
    auto best = dims.begin();
    for (auto it = dims.begin(); it != dims.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    fired.push_back(best->first);
  }
  for (Dimension dim : fired) {
    if (dim == Dimension::kFeedback) {
      t.predicted.push_back({dim, kFeedbackNode});
      continue;
    }
    auto fm = model.function_models.find(dim);
    if (fm == model.function_models.end()) {
      t.predicted.push_back({dim, model.taxonomy.Root(dim).id});
      continue;
    }
    Prediction p = Predict(fm->second, x);
    for (size_t c = 0; c < p.scores.size(); ++c) {
      t.scores[std::string(DimensionName(dim)) + ":" + fm->second.classes[c]] = p.scores[c];
    }
    t.predicted.push_back({dim, p.label});
  }
  return t;
}

// Trains one detector or function model; `job` selects which.
struct TrainJob {
  enum Kind { kSwda, kDetector, kFunction } kind;
  Dimension dim = Dimension::kTask;
};

}  // namespace

std::string_view TaggerModeName(TaggerMode mode) {
  return mode == TaggerMode::kSwda42 ? "SWDA42" : "ISO_SUBSET";
}

TaggerMode ParseTaggerMode(std::string_view name) {
  std::string n = Lower(name);
  if (n == "swda42" || n == "swda") return TaggerMode::kSwda42;
  if (n == "iso_subset" || n == "iso") return TaggerMode::kIsoSubset;
  throw UsageError("unknown tagger mode '" + std::string(name) + "'");
}

std::string_view ContextModeName(ContextMode mode) {
  return mode == ContextMode::kGoldPrev ? "gold_prev" : "predicted_prev";
}

ContextMode ParseContextMode(std::string_view name) {
  std::string n = Lower(name);
  if (n == "gold_prev" || n == "gold") return ContextMode::kGoldPrev;
  if (n == "predicted_prev" || n == "predicted") return ContextMode::kPredictedPrev;
  throw UsageError("unknown context mode '" + std::string(name) + "'");
}

bool HasDimension(const Utterance &u, Dimension dim) {
  if (!u.mapped_tags) return false;
  for (const auto &t : *u.mapped_tags) {
    if (t.dimension == dim) return true;
  }
  return false;
}

std::optional<std::string> GoldFunction(const Utterance &u, Dimension dim,
                                        const Taxonomy &taxonomy) {
  if (!u.mapped_tags) return std::nullopt;
  const Level level = FunctionLevel(dim);
  for (const auto &t : *u.mapped_tags) {
    if (t.dimension == dim && taxonomy.IsClassifierLabel(t.node, level)) return t.node;
  }
  return std::nullopt;
}

std::string GoldContextTag(const Utterance &u, TaggerMode mode,
                           const SwdaCollapser *collapser) {
  if (mode == TaggerMode::kSwda42) {
    if (collapser == nullptr) throw ConfigError("SWDA42 mode needs the WS97 collapse table");
    if (u.source_tags.empty()) {
      throw UsageError("utterance " + u.utterance_id + " has no source tag");
    }
    return collapser->Collapse(u.source_tags.front().tag);
  }
  if (!u.mapped_tags || u.mapped_tags->empty()) {
    throw UsageError("utterance " + u.utterance_id + " has no mapped tags");
  }
  for (Dimension dim : kDimensions) {
    for (const auto &t : *u.mapped_tags) {
      if (t.dimension == dim) return t.ToString();
    }
  }
  return u.mapped_tags->front().ToString();
}

std::string PredictedContextTag(const TaggedUtterance &t, TaggerMode mode) {
  if (mode == TaggerMode::kSwda42) return t.label.value_or(kNoPrevTag);
  for (Dimension dim : kDimensions) {
    for (const auto &p : t.predicted) {
      if (p.dimension == dim) return p.ToString();
    }
  }
  return kNoPrevTag;
}

bool EvalFilter::Keeps(const Utterance &u) const {
  if (speakers.empty()) return true;
  std::string s = Lower(u.speaker);
  for (const auto &k : speakers) {
    if (Lower(k) == s) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Model

void TaggerModel::Validate() const {
  if (!vocab) throw ValidationError("tagger model has no vocabulary");
  const WeightLayout layout = LayoutFor(*this);
  auto check = [&](const LinearModel &m, const std::string &what) {
    m.Validate();
    if (m.layout.num_sparse != layout.num_sparse || m.layout.dense_dim != layout.dense_dim) {
      throw ValidationError(what + " model dimensions differ from the bundle's");
    }
  };
  if (mode == TaggerMode::kSwda42) {
    if (!swda_model) throw ValidationError("SWDA42 model missing its classifier");
    check(*swda_model, "SWDA42");
    return;
  }
  for (Dimension dim : kDimensions) {
    auto it = dimension_models.find(dim);
    if (it == dimension_models.end()) {
      throw ValidationError("ISO_SUBSET model missing the " +
                            std::string(DimensionName(dim)) + " dimension model");
    }
    if (!it->second.binary()) throw ValidationError("dimension models must be binary");
    check(it->second, std::string(DimensionName(dim)));
  }
  for (const auto &[dim, m] : function_models) {
    if (dim == Dimension::kFeedback) {
      throw ValidationError("Feedback has no function model");
    }
    check(m, std::string(DimensionName(dim)) + " function");
    for (const auto &c : m.classes) {
      if (!taxonomy.IsClassifierLabel(c, FunctionLevel(dim))) {
        throw ValidationError("function class '" + c + "' is not a " +
                              std::string(LevelName(FunctionLevel(dim))) + " label");
      }
    }
  }
}

void TaggerModel::Save(const std::string &dir) const {
  Validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create model directory: " + ec.message());
  const fs::path root(dir);
  vocab->Save((root / "vocab.tsv").string());
  {
    std::ofstream out(root / "taxonomy.tsv");
    if (!out) throw IoError((root / "taxonomy.tsv").string(), "cannot write");
    taxonomy.Write(out);
  }
  Json models = Json::object();
  auto save = [&](const LinearModel &m, const std::string &key, const std::string &file) {
    LinearModel copy = m;
    copy.vocab_ref = "vocab.tsv";
    copy.Save((root / file).string());
    models[key] = file;
  };
  if (swda_model) save(*swda_model, "swda", "swda.model");
  for (const auto &[dim, m] : dimension_models) {
    std::string d(DimensionName(dim));
    save(m, "dimension:" + d, "dimension_" + Lower(d) + ".model");
  }
  for (const auto &[dim, m] : function_models) {
    std::string d(DimensionName(dim));
    save(m, "function:" + d, "function_" + Lower(d) + ".model");
  }
  Json j;
  j["format"] = kBundleFormat;
  j["version"] = kBundleVersion;
  j["mode"] = TaggerModeName(mode);
  j["features"] = features.Name();
  j["embedding_dim"] = features.embedding_dim;
  j["vocab"] = "vocab.tsv";
  j["taxonomy"] = "taxonomy.tsv";
  j["models"] = std::move(models);
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError((root / "manifest.json").string(), "cannot write");
  out << j.dump(2) << '\n';
}

TaggerModel TaggerModel::Load(const std::string &dir) {
  const fs::path root(dir);
  const std::string manifest = (root / "manifest.json").string();
  std::ifstream in(manifest);
  if (!in) throw IoError(manifest, "cannot open model manifest");
  TaggerModel m;
  try {
    Json j = Json::parse(in);
    if (j.at("format").get<std::string>() != kBundleFormat) {
      throw ParseError(manifest, "not a tagger bundle");
    }
    if (j.at("version").get<int>() != kBundleVersion) {
      throw ParseError(manifest, "unsupported bundle version");
    }
    m.mode = ParseTaggerMode(j.at("mode").get<std::string>());
    m.features = FeatureConfig::Parse(j.at("features").get<std::string>());
    m.features.embedding_dim = j.at("embedding_dim").get<int>();
    m.vocab = std::make_shared<Vocabulary>(
        Vocabulary::Load((root / j.at("vocab").get<std::string>()).string()));
    m.taxonomy = Taxonomy::Load((root / j.at("taxonomy").get<std::string>()).string());
    for (const auto &[key, file] : j.at("models").items()) {
      LinearModel lm = LinearModel::Load((root / file.get<std::string>()).string());
      if (key == "swda") {
        m.swda_model = std::move(lm);
      } else if (key.starts_with("dimension:")) {
        m.dimension_models.emplace(ParseDimension(key.substr(10)), std::move(lm));
      } else if (key.starts_with("function:")) {
        m.function_models.emplace(ParseDimension(key.substr(9)), std::move(lm));
      } else {
        throw ParseError(manifest, "unknown model key '" + key + "'");
      }
    }
  } catch (const Json::exception &e) {
    throw ParseError(manifest, e.what());
  } catch (const UsageError &e) {
    throw ParseError(manifest, e.what());
  }
  m.Validate();
  return m;
}

// ---------------------------------------------------------------------------
// Training

TaggerModel TrainTagger(const DialogueCollection &train, const TaggerConfig &cfg,
                        const Taxonomy &taxonomy, const TagOptions &opts) {
  cfg.train.Validate();
  CheckEmbeddings(cfg.features, opts);
  TaggerModel model;
  model.mode = cfg.mode;
  model.features = cfg.features;
  model.taxonomy = taxonomy;

  // Featurize in corpus order so feature ids are reproducible.
  auto vocab = std::make_shared<Vocabulary>();
  std::vector<FeatureVector> xs;
  std::vector<const Utterance *> us;
  for (const auto &d : train) {
    std::string prev = kNoPrevTag;
    for (const auto &u : d.utterances) {
      xs.push_back(Extract(u, prev, cfg.features, *vocab, opts.embeddings));
      us.push_back(&u);
      prev = GoldContextTag(u, cfg.mode, opts.collapser);
    }
  }
  if (xs.empty()) throw TrainingError("no training utterances");
  vocab->Freeze();
  model.vocab = vocab;
  const WeightLayout layout = LayoutFor(model);

  if (cfg.mode == TaggerMode::kSwda42) {
    std::vector<std::string> labels;
    labels.reserve(us.size());
    for (const auto *u : us) labels.push_back(GoldContextTag(*u, cfg.mode, opts.collapser));
    model.swda_model = TrainOvr(xs, labels, layout, cfg.train);
    model.swda_model->feature_config = cfg.features;
    return model;
  }

  std::vector<TrainJob> jobs;
  for (Dimension dim : kDimensions) jobs.push_back({TrainJob::kDetector, dim});
  jobs.push_back({TrainJob::kFunction, Dimension::kTask});
  jobs.push_back({TrainJob::kFunction, Dimension::kSom});
  std::vector<std::optional<LinearModel>> results(jobs.size());
  std::exception_ptr error;

#pragma omp parallel for schedule(dynamic, 1)
  for (long j = 0; j < static_cast<long>(jobs.size()); ++j) {
    try {
      const TrainJob job = jobs[j];
      const std::string dim_name(DimensionName(job.dim));
      if (job.kind == TrainJob::kDetector) {
        std::vector<bool> positive(us.size());
        for (size_t i = 0; i < us.size(); ++i) positive[i] = HasDimension(*us[i], job.dim);
        results[j] = TrainDetector(xs, positive, dim_name, layout, cfg.train);
      } else {
        std::vector<FeatureVector> fx;
        std::vector<std::string> fy;
        for (size_t i = 0; i < us.size(); ++i) {
          auto label = GoldFunction(*us[i], job.dim, taxonomy);
          if (!label) continue;
          fx.push_back(xs[i]);
          fy.push_back(*label);
        }
        std::vector<std::string> classes =
            taxonomy.ClassifierLabels(FunctionLevel(job.dim));
        if (!cfg.require_all_classes) {
          std::set<std::string> present(fy.begin(), fy.end());
          std::erase_if(classes, [&](const std::string &c) { return !present.count(c); });
          if (classes.size() < 2) continue;
        }
        if (fx.empty()) {
          throw TrainingError(dim_name + " function model has no training examples");
        }
        results[j] = TrainOvr(fx, fy, layout, cfg.train, classes);
      }
      results[j]->feature_config = cfg.features;
    } catch (...) {
#pragma omp critical(datag_tagger_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  for (size_t j = 0; j < jobs.size(); ++j) {
    if (!results[j]) continue;
    auto &target = jobs[j].kind == TrainJob::kDetector ? model.dimension_models
                                                       : model.function_models;
    target.emplace(jobs[j].dim, std::move(*results[j]));
  }
  model.Validate();
  return model;
}

// ---------------------------------------------------------------------------
// Tagging

std::vector<TaggedUtterance> Tag(const TaggerModel &model,
                                 const UnifiedDialogue &dialogue,
                                 const TagOptions &opts) {
  CheckEmbeddings(model.features, opts);
  std::vector<TaggedUtterance> out;
  out.reserve(dialogue.utterances.size());
  std::string prev = kNoPrevTag;
  for (const auto &u : dialogue.utterances) {
    FeatureVector x = ExtractFrozen(u, prev, model.features, *model.vocab, opts.embeddings);
    out.push_back(Decide(model, dialogue, u, x));
    if (!model.features.use_prev_da) continue;
    prev = opts.context == ContextMode::kGoldPrev
               ? GoldContextTag(u, model.mode, opts.collapser)
               : PredictedContextTag(out.back(), model.mode);
  }
  return out;
}

std::vector<std::vector<TaggedUtterance>> TagCollection(
    const TaggerModel &model, const DialogueCollection &dialogues,
    const TagOptions &opts) {
  std::vector<std::vector<TaggedUtterance>> out(dialogues.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(dialogues.size()); ++i) {
    try {
      out[i] = Tag(model, dialogues[i], opts);
    } catch (...) {
#pragma omp critical(datag_tag_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

void WriteTagged(std::ostream &out,
                 const std::vector<std::vector<TaggedUtterance>> &tagged) {
  for (const auto &dialogue : tagged) {
    for (const auto &t : dialogue) {
      Json j;
      j["dialogue_id"] = t.dialogue_id;
      j["utterance_id"] = t.utterance_id;
      j["speaker"] = t.speaker;
      if (t.label) {
        j["label"] = *t.label;
      } else {
        Json tags = Json::array();
        for (const auto &p : t.predicted) tags.push_back(p.ToString());
        j["predicted"] = std::move(tags);
      }
      j["scores"] = t.scores;
      out << j.dump() << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

LabelPairs EvaluateFlat(const TaggerModel &model,
                        const DialogueCollection &dialogues,
                        const TagOptions &opts, const EvalFilter &filter) {
  if (model.mode != TaggerMode::kSwda42) {
    throw UsageError("flat evaluation needs an SWDA42 model");
  }
  auto tagged = TagCollection(model, dialogues, opts);
  LabelPairs out;
  for (size_t i = 0; i < dialogues.size(); ++i) {
    const auto &d = dialogues[i];
    for (size_t k = 0; k < d.utterances.size(); ++k) {
      const Utterance &u = d.utterances[k];
      if (!filter.Keeps(u)) continue;
      out.predicted.push_back(*tagged[i][k].label);
      out.gold.push_back(GoldContextTag(u, model.mode, opts.collapser));
      out.keys.push_back(Key(d, u));
    }
  }
  return out;
}

namespace {

// Feature vectors for every utterance with PREV taken from the context mode.
std::vector<std::vector<FeatureVector>> ContextFeatures(
    const TaggerModel &model, const DialogueCollection &dialogues,
    const TagOptions &opts) {
  CheckEmbeddings(model.features, opts);
  std::vector<std::vector<TaggedUtterance>> tagged;
  if (opts.context == ContextMode::kPredictedPrev) {
    tagged = TagCollection(model, dialogues, opts);
  }
  std::vector<std::vector<FeatureVector>> out(dialogues.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(dialogues.size()); ++i) {
    try {
      const auto &d = dialogues[i];
      std::string prev = kNoPrevTag;
      for (size_t k = 0; k < d.utterances.size(); ++k) {
        const Utterance &u = d.utterances[k];
        out[i].push_back(
            ExtractFrozen(u, prev, model.features, *model.vocab, opts.embeddings));
        prev = opts.context == ContextMode::kGoldPrev
                   ? GoldContextTag(u, model.mode, opts.collapser)
                   : PredictedContextTag(tagged[i][k], model.mode);
      }
    } catch (...) {
#pragma omp critical(datag_ctx_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace

DimensionReport EvaluateDimensions(const TaggerModel &model,
                                   const DialogueCollection &dialogues,
                                   const TagOptions &opts,
                                   const EvalFilter &filter) {
  if (model.mode != TaggerMode::kIsoSubset) {
    throw UsageError("dimension evaluation needs an ISO_SUBSET model");
  }
  auto features = ContextFeatures(model, dialogues, opts);
  DimensionReport report;
  size_t correct = 0;
  size_t total = 0;
  double acc_sum = 0.0;
  for (Dimension dim : kDimensions) {
    const LinearModel &det = model.dimension_models.at(dim);
    DimensionScore score;
    score.dimension = dim;
    LabelPairs pairs;
    for (size_t i = 0; i < dialogues.size(); ++i) {
      const auto &d = dialogues[i];
      for (size_t k = 0; k < d.utterances.size(); ++k) {
        const Utterance &u = d.utterances[k];
        if (!filter.Keeps(u)) continue;
        const bool gold = HasDimension(u, dim);
        const bool pred = det.Score(features[i][k], 0) > 0;
        ++score.total;
        score.correct += gold == pred;
        score.gold_positives += gold;
        pairs.predicted.push_back(pred ? "1" : "0");
        pairs.gold.push_back(gold ? "1" : "0");
        pairs.keys.push_back(Key(d, u));
      }
    }
    if (score.gold_positives == 0) continue;
    correct += score.correct;
    total += score.total;
    acc_sum += score.accuracy();
    report.dimensions.push_back(score);
    report.decisions.emplace(dim, std::move(pairs));
  }
  if (!report.dimensions.empty()) {
    report.micro = static_cast<double>(correct) / total;
    report.macro = acc_sum / report.dimensions.size();
  }
  return report;
}

std::map<Dimension, LabelPairs> EvaluateFunctionsGoldDims(
    const TaggerModel &model, const DialogueCollection &dialogues,
    const TagOptions &opts, const EvalFilter &filter) {
  if (model.mode != TaggerMode::kIsoSubset) {
    throw UsageError("function evaluation needs an ISO_SUBSET model");
  }
  auto features = ContextFeatures(model, dialogues, opts);
  std::map<Dimension, LabelPairs> out;
  for (const auto &[dim, fm] : model.function_models) {
    LabelPairs &pairs = out[dim];
    for (size_t i = 0; i < dialogues.size(); ++i) {
      const auto &d = dialogues[i];
      for (size_t k = 0; k < d.utterances.size(); ++k) {
        const Utterance &u = d.utterances[k];
        if (!filter.Keeps(u)) continue;
        auto gold = GoldFunction(u, dim, model.taxonomy);
        if (!gold) continue;
        pairs.predicted.push_back(Predict(fm, features[i][k]).label);
        pairs.gold.push_back(*gold);
        pairs.keys.push_back(Key(d, u));
      }
    }
  }
  return out;
}

}  // namespace datag
