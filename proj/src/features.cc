#include "datag/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "datag/errors.h"
#include "datag/preprocess.h"

namespace datag {

namespace {

std::string Upper(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

std::string Lower(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::string Trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename IdFn>
FeatureVector ExtractWith(const Utterance &u, std::string_view prev_tag,
                          const FeatureConfig &cfg, IdFn &&id_of,
                          const EmbeddingTable *embeddings) {
  FeatureVector fv;
  std::vector<int> ids;
  for (const auto &name : SparseFeatureNames(u, prev_tag, cfg)) {
    int id = id_of(name);
    if (id >= 0) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  fv.sparse.reserve(ids.size());
  for (int id : ids) fv.sparse.emplace_back(id, 1.0);

  if (cfg.use_embeddings) {
    if (embeddings == nullptr) {
      throw ConfigError("embedding features enabled but no embedding table loaded");
    }
    if (cfg.embedding_dim != embeddings->dim()) {
      throw ConfigError("embedding dimension " + std::to_string(embeddings->dim()) +
                        " does not match configured " + std::to_string(cfg.embedding_dim));
    }
    fv.dense.assign(embeddings->dim(), 0.0);
    int found = 0;
    for (const auto &tok : SplitTokens(u.normalized_text.value_or(""))) {
      const std::vector<float> *vec = embeddings->Find(tok);
      if (vec == nullptr) continue;
      for (size_t k = 0; k < vec->size(); ++k) fv.dense[k] += (*vec)[k];
      ++found;
    }
    if (found > 0) {
      for (double &v : fv.dense) v /= found;
    }
  }
  return fv;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureConfig

FeatureConfig FeatureConfig::Parse(std::string_view spec) {
  FeatureConfig cfg;
  cfg.use_unigrams = false;
  std::string s(spec);
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '+')) {
    std::string p = Upper(Trim(part));
    if (p.empty()) continue;
    if (p.size() > 5 && p.ends_with("-GRAMS")) {
      std::string orders = p.substr(0, p.size() - 6);
      std::stringstream os(orders);
      std::string n;
      while (std::getline(os, n, '-')) {
        if (n == "1") {
          cfg.use_unigrams = true;
        } else if (n == "2") {
          cfg.use_bigrams = true;
        } else if (n == "3") {
          cfg.use_trigrams = true;
        } else {
          throw UsageError("unsupported n-gram order in '" + Trim(part) + "'");
        }
      }
    } else if (p == "PREV") {
      cfg.use_prev_da = true;
    } else if (p == "POS") {
      cfg.use_pos = true;
    } else if (p == "I-POS") {
      cfg.use_ipos = true;
    } else if (p == "DEP") {
      cfg.use_dep = true;
    } else if (p == "I-DEP") {
      cfg.use_idep = true;
    } else if (p == "WE") {
      cfg.use_embeddings = true;
    } else {
      throw UsageError("unknown feature family '" + Trim(part) + "'");
    }
  }
  if (!cfg.AnyEnabled()) throw UsageError("no feature family enabled in '" + s + "'");
  return cfg;
}

bool FeatureConfig::AnyEnabled() const {
  return use_unigrams || use_bigrams || use_trigrams || use_prev_da || use_pos ||
         use_ipos || use_dep || use_idep || use_embeddings;
}

std::string FeatureConfig::Name() const {
  std::vector<std::string> parts;
  std::string grams;
  if (use_unigrams) grams += "1-";
  if (use_bigrams) grams += "2-";
  if (use_trigrams) grams += "3-";
  if (!grams.empty()) parts.push_back(grams + "grams");
  if (use_prev_da) parts.push_back("PREV");
  if (use_pos) parts.push_back("POS");
  if (use_ipos) parts.push_back("I-POS");
  if (use_dep) parts.push_back("DEP");
  if (use_idep) parts.push_back("I-DEP");
  if (use_embeddings) parts.push_back("WE");
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "+";
    out += parts[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

int Vocabulary::Intern(std::string_view name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  if (frozen_) return -1;
  int id = static_cast<int>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(std::string(name), id);
  return id;
}

int Vocabulary::Find(std::string_view name) const {
  auto it = ids_.find(name);
  return it == ids_.end() ? -1 : it->second;
}

void Vocabulary::Save(std::ostream &out) const {
  for (size_t i = 0; i < names_.size(); ++i) out << names_[i] << '\t' << i << '\n';
}

void Vocabulary::Save(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  Save(out);
}

Vocabulary Vocabulary::Load(std::istream &in, const std::string &name) {
  Vocabulary v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t tab = line.rfind('\t');
    std::string loc = name + ":" + std::to_string(lineno);
    if (tab == std::string::npos) throw ParseError(loc, "expected name<TAB>id");
    int id = -1;
    auto [p, ec] = std::from_chars(line.data() + tab + 1, line.data() + line.size(), id);
    if (ec != std::errc() || p != line.data() + line.size()) {
      throw ParseError(loc, "bad feature id");
    }
    if (id != v.size()) throw ParseError(loc, "feature ids must be consecutive from 0");
    std::string feature = line.substr(0, tab);
    if (v.Intern(feature) != id) throw ParseError(loc, "duplicate feature " + feature);
  }
  v.Freeze();
  return v;
}

Vocabulary Vocabulary::Load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open vocabulary");
  return Load(in, path);
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingTable EmbeddingTable::Parse(std::istream &in, const std::string &name,
                                     int expected_dim) {
  if (expected_dim <= 0) throw UsageError("embedding dimension must be positive");
  EmbeddingTable table(expected_dim);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (lineno == 1 && fields.size() == 1 && expected_dim != 1 &&
        token.find_first_not_of("0123456789") == std::string::npos) {
      continue;  // word2vec header
    }
    if (static_cast<int>(fields.size()) != expected_dim) {
      throw ParseError(name + ":" + std::to_string(lineno),
                       "expected " + std::to_string(expected_dim) + " values, found " +
                           std::to_string(fields.size()));
    }
    std::vector<float> vec(expected_dim);
    for (int k = 0; k < expected_dim; ++k) {
      const char *b = fields[k].data();
      const char *e = b + fields[k].size();
      auto [p, ec] = std::from_chars(b, e, vec[k]);
      if (ec != std::errc() || p != e || !std::isfinite(vec[k])) {
        throw ParseError(name + ":" + std::to_string(lineno), "bad value '" + fields[k] + "'");
      }
    }
    table.Add(std::move(token), std::move(vec));
  }
  return table;
}

EmbeddingTable EmbeddingTable::Load(const std::string &path, int expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open embeddings");
  return Parse(in, path, expected_dim);
}

void EmbeddingTable::Add(std::string token, std::vector<float> vec) {
  if (static_cast<int>(vec.size()) != dim_) {
    throw DimensionError("embedding for '" + token + "' has wrong dimension");
  }
  table_.insert_or_assign(std::move(token), std::move(vec));
}

const std::vector<float> *EmbeddingTable::Find(std::string_view token) const {
  auto it = table_.find(std::string(token));
  if (it != table_.end()) return &it->second;
  std::string lower = Lower(token);
  if (lower != token) {
    it = table_.find(lower);
    if (it != table_.end()) return &it->second;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Extraction

std::vector<std::string> SparseFeatureNames(const Utterance &u,
                                            std::string_view prev_tag,
                                            const FeatureConfig &cfg) {
  if (!u.normalized_text) {
    throw UsageError("utterance " + u.utterance_id + " has no normalized text");
  }
  std::vector<std::string> names;
  std::vector<std::string> tokens = SplitTokens(*u.normalized_text);
  if (cfg.use_unigrams) {
    for (const auto &t : tokens) names.push_back(t);
  }
  if (cfg.use_bigrams || cfg.use_trigrams) {
    std::vector<std::string> padded;
    padded.reserve(tokens.size() + 2);
    padded.emplace_back("<s>");
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.emplace_back("</s>");
    if (cfg.use_bigrams) {
      for (size_t i = 0; i + 1 < padded.size(); ++i) {
        names.push_back(padded[i] + " " + padded[i + 1]);
      }
    }
    if (cfg.use_trigrams) {
      for (size_t i = 0; i + 2 < padded.size(); ++i) {
        names.push_back(padded[i] + " " + padded[i + 1] + " " + padded[i + 2]);
      }
    }
  }
  if (cfg.use_prev_da) {
    names.push_back("PREV=" + std::string(prev_tag.empty() ? kNoPrevTag : prev_tag));
  }
  if (cfg.NeedsTokens()) {
    if (!u.tokens) {
      throw ConfigError("utterance " + u.utterance_id +
                        " has no sidecar annotations but syntactic features are enabled");
    }
    for (const auto &t : *u.tokens) {
      std::string idx = std::to_string(t.index);
      if (cfg.use_pos) names.push_back("POS=" + t.pos);
      if (cfg.use_ipos) names.push_back("POS@" + idx + "=" + t.pos);
      if (cfg.use_dep) names.push_back("DEP=" + t.dep_relation);
      if (cfg.use_idep) names.push_back("DEP@" + idx + "=" + t.dep_relation);
    }
  }
  return names;
}

FeatureVector Extract(const Utterance &u, std::string_view prev_tag,
                      const FeatureConfig &cfg, Vocabulary &vocab,
                      const EmbeddingTable *embeddings) {
  return ExtractWith(
      u, prev_tag, cfg, [&](const std::string &name) { return vocab.Intern(name); },
      embeddings);
}

FeatureVector ExtractFrozen(const Utterance &u, std::string_view prev_tag,
                            const FeatureConfig &cfg, const Vocabulary &vocab,
                            const EmbeddingTable *embeddings) {
  if (!vocab.frozen()) throw UsageError("ExtractFrozen needs a frozen vocabulary");
  return ExtractWith(
      u, prev_tag, cfg, [&](const std::string &name) { return vocab.Find(name); },
      embeddings);
}

std::vector<FeatureVector> ExtractBatch(const std::vector<ExtractRequest> &requests,
                                        const FeatureConfig &cfg,
                                        const Vocabulary &vocab,
                                        const EmbeddingTable *embeddings) {
  if (!vocab.frozen()) throw UsageError("ExtractBatch needs a frozen vocabulary");
  std::vector<FeatureVector> out(requests.size());
  // Exceptions must not escape an OpenMP region; keep the first one.
  std::exception_ptr error;
  const long n = static_cast<long>(requests.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = ExtractFrozen(*requests[i].utterance, requests[i].prev_tag, cfg, vocab,
                             embeddings);
    } catch (...) {
#pragma omp critical(datag_extract_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<FeatureVector> ExtractBatchSerial(
    const std::vector<ExtractRequest> &requests, const FeatureConfig &cfg,
    const Vocabulary &vocab, const EmbeddingTable *embeddings) {
  std::vector<FeatureVector> out;
  out.reserve(requests.size());
  for (const auto &r : requests) {
    out.push_back(ExtractFrozen(*r.utterance, r.prev_tag, cfg, vocab, embeddings));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CoNLL-U

Annotations ParseConllu(std::istream &in, const std::string &name) {
  Annotations out;
  std::string line;
  int lineno = 0;
  std::optional<std::string> key;
  bool failed = false;
  std::vector<TokenAnnotation> tokens;
  int block_start = 0;

  auto finish = [&] {
    if (!key && tokens.empty() && !failed) return;
    std::string loc = name + ":" + std::to_string(block_start);
    if (!key) throw ParseError(loc, "sentence without '# utterance_id' comment");
    for (const auto &t : tokens) {
      if (t.head == t.index) {
        throw ValidationError(loc + ": token " + std::to_string(t.index + 1) +
                              " of " + *key + " is its own head");
      }
      if (t.head != kRootHead &&
          (t.head < 0 || t.head >= static_cast<int>(tokens.size()))) {
        throw ValidationError(loc + ": token " + std::to_string(t.index + 1) +
                              " of " + *key + " has an out-of-range head");
      }
    }
    if (failed) tokens.clear();
    if (!out.emplace(*key, std::move(tokens)).second) {
      throw ParseError(loc, "duplicate utterance_id " + *key);
    }
    key.reset();
    failed = false;
    tokens.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish();
      continue;
    }
    if (!key && tokens.empty() && !failed) block_start = lineno;
    if (line[0] == '#') {
      std::string body = Trim(line.substr(1));
      size_t eq = body.find('=');
      if (eq == std::string::npos) continue;
      std::string k = Trim(body.substr(0, eq));
      std::string v = Trim(body.substr(eq + 1));
      if (k == "utterance_id") key = v;
      if (k == "alignment" && v == "failed") failed = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t')) cols.push_back(c);
    std::string loc = name + ":" + std::to_string(lineno);
    if (cols.size() != 10) throw ParseError(loc, "expected 10 tab-separated columns");
    if (cols[0].find_first_of("-.") != std::string::npos) continue;  // multiword/empty
    int id = 0;
    int head = 0;
    auto r1 = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), id);
    auto r2 = std::from_chars(cols[6].data(), cols[6].data() + cols[6].size(), head);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      throw ParseError(loc, "non-numeric ID or HEAD");
    }
    if (id != static_cast<int>(tokens.size()) + 1) {
      throw ParseError(loc, "token ids must be consecutive from 1");
    }
    TokenAnnotation t;
    t.index = id - 1;
    t.form = cols[1];
    t.pos = cols[4] != "_" ? cols[4] : cols[3];
    t.dep_relation = cols[7];
    t.head = head == 0 ? kRootHead : head - 1;
    tokens.push_back(std::move(t));
  }
  finish();
  return out;
}

Annotations LoadConllu(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open CoNLL-U file");
  return ParseConllu(in, path);
}

void WriteConllu(std::ostream &out, const std::string &key,
                 const std::vector<TokenAnnotation> &tokens) {
  out << "# utterance_id = " << key << '\n';
  for (const auto &t : tokens) {
    out << (t.index + 1) << '\t' << t.form << "\t_\t_\t" << t.pos << "\t_\t"
        << (t.head == kRootHead ? 0 : t.head + 1) << '\t' << t.dep_relation
        << "\t_\t_\n";
  }
  out << '\n';
}

AlignmentReport AttachAnnotations(DialogueCollection &dialogues,
                                  const Annotations &annotations) {
  AlignmentReport report;
  for (auto &d : dialogues) {
    for (auto &u : d.utterances) {
      auto it = annotations.find(d.dialogue_id + "/" + u.utterance_id);
      if (it == annotations.end()) it = annotations.find(u.utterance_id);
      if (it == annotations.end()) {
        ++report.missing;
        continue;
      }
      size_t expected = SplitTokens(u.normalized_text.value_or(u.raw_text)).size();
      if (it->second.size() != expected || it->second.empty()) {
        ++report.failed;
        report.failed_ids.push_back(d.dialogue_id + "/" + u.utterance_id);
        u.tokens = std::vector<TokenAnnotation>{};
        continue;
      }
      ++report.aligned;
      u.tokens = it->second;
    }
  }
  return report;
}

}  // namespace datag
