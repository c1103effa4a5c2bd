#include "datag/ingest.h"

#include <fnmatch.h>

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "datag/errors.h"
#include "json.hpp"

namespace datag {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string Trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string CollapseSpaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::ifstream OpenText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return in;
}

pt::ptree ReadXml(const std::string &path) {
  std::ifstream in = OpenText(path);
  pt::ptree tree;
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error &e) {
    throw ParseError(path + ":" + std::to_string(e.line()), e.message());
  }
  return tree;
}

std::string_view LocalName(std::string_view name) {
  size_t colon = name.rfind(':');
  return colon == std::string_view::npos ? name : name.substr(colon + 1);
}

std::string Attr(const pt::ptree &node, const std::string &name,
                 const std::string &fallback = "") {
  auto attrs = node.get_child_optional("<xmlattr>");
  if (!attrs) return fallback;
  // Accept both the exact name and any namespace prefix (nite:id, xml:id).
  for (const auto &[key, value] : *attrs) {
    if (key == name || LocalName(key) == name) return value.data();
  }
  return fallback;
}

bool IsMarkupChild(const std::string &name) {
  return name == "<xmlattr>" || name == "<xmlcomment>" || name == "<xmltext>";
}

// Depth-first visit of every element in document order.
template <typename Fn>
void VisitElements(const pt::ptree &tree, Fn &&fn) {
  for (const auto &[name, child] : tree) {
    if (IsMarkupChild(name)) continue;
    fn(name, child);
    VisitElements(child, fn);
  }
}

struct Href {
  std::string file;
  std::string first_id;
  std::string last_id;  // equals first_id for single pointers
};

Href ParseHref(const std::string &href, const std::string &locator) {
  static const std::regex kHref(R"(^([^#]*)#id\(([^)]+)\)(?:\.\.id\(([^)]+)\))?$)");
  std::smatch m;
  if (!std::regex_match(href, m, kHref)) {
    throw ParseError(locator, "malformed href '" + href + "'");
  }
  Href h;
  h.file = m[1];
  h.first_id = m[2];
  h.last_id = m[3].matched ? std::string(m[3]) : h.first_id;
  return h;
}

// Ordered id -> (element name, text) table for an NXT leaf file.
struct LeafFile {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<std::string> texts;
  std::vector<std::string> starts;
  std::map<std::string, size_t> index;
};

LeafFile LoadLeafFile(const std::string &path) {
  pt::ptree tree = ReadXml(path);
  LeafFile leaves;
  VisitElements(tree, [&](const std::string &name, const pt::ptree &node) {
    std::string id = Attr(node, "id");
    if (id.empty()) return;
    leaves.index[id] = leaves.ids.size();
    leaves.ids.push_back(id);
    leaves.names.push_back(std::string(LocalName(name)));
    leaves.texts.push_back(Trim(node.data()));
    leaves.starts.push_back(Attr(node, "starttime", Attr(node, "start")));
  });
  return leaves;
}

// Text of the `word_element` leaves in the id range of `href`.
std::string ResolveRange(const LeafFile &leaves, const Href &href,
                         const std::string &word_element,
                         const std::string &locator) {
  auto a = leaves.index.find(href.first_id);
  auto b = leaves.index.find(href.last_id);
  if (a == leaves.index.end() || b == leaves.index.end()) {
    throw ParseError(locator, "dangling pointer to " + href.first_id);
  }
  if (b->second < a->second) {
    throw ParseError(locator, "reversed range " + href.first_id + ".." + href.last_id);
  }
  std::string text;
  for (size_t i = a->second; i <= b->second; ++i) {
    if (leaves.names[i] != word_element || leaves.texts[i].empty()) continue;
    if (!text.empty()) text.push_back(' ');
    text += leaves.texts[i];
  }
  return text;
}

// Resolves an NXT href relative to the pointing file, then in a sibling
// directory named after the leaf layer.
std::string ResolveNxtPath(const std::string &from_file, const std::string &target,
                           const std::string &sibling_dir) {
  fs::path base = fs::path(from_file).parent_path();
  fs::path direct = base / target;
  if (fs::exists(direct)) return direct.string();
  fs::path sibling = base.parent_path() / sibling_dir / target;
  if (fs::exists(sibling)) return sibling.string();
  return direct.string();
}

std::string FileStem(const std::string &path) {
  std::string name = fs::path(path).filename().string();
  size_t dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

void Renumber(UnifiedDialogue &d) {
  for (size_t i = 0; i < d.utterances.size(); ++i) {
    d.utterances[i].position = static_cast<int>(i);
  }
}

template <typename T>
std::optional<T> OptionalField(const nlohmann::json &j, const char *key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

CorpusManifest CorpusManifest::FromJson(const std::string &text,
                                        const std::string &locator) {
  CorpusManifest m;
  try {
    auto j = nlohmann::json::parse(text);
    m.corpus = ParseCorpus(j.at("corpus").get<std::string>());
    m = Default(m.corpus);
    if (j.contains("file_globs")) {
      m.file_globs = j["file_globs"].get<std::vector<std::string>>();
    }
    m.expected_dialogues = OptionalField<long>(j, "expected_dialogues");
    m.expected_utterances = OptionalField<long>(j, "expected_utterances");
    m.split_file = OptionalField<std::string>(j, "split_file");
    if (j.contains("expected_splits")) {
      m.expected_splits = j["expected_splits"].get<std::map<std::string, long>>();
    }
    if (j.contains("mode")) {
      std::string mode = j["mode"].get<std::string>();
      if (mode != "annotated" && mode != "raw") {
        throw ParseError(locator, "mode must be 'annotated' or 'raw'");
      }
      m.annotated = mode == "annotated";
    }
    if (j.contains("ws97")) m.ws97 = j["ws97"].get<bool>();
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(locator, e.what());
  } catch (const UsageError &e) {
    throw ParseError(locator, e.what());
  }
  return m;
}

CorpusManifest CorpusManifest::Load(const std::string &path) {
  std::ifstream in = OpenText(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str(), path);
}

CorpusManifest CorpusManifest::Default(Corpus corpus) {
  CorpusManifest m;
  m.corpus = corpus;
  switch (corpus) {
    case Corpus::kSwda:
      m.file_globs = {"*.utt"};
      break;
    case Corpus::kMapTask:
      m.file_globs = {"*.moves.xml"};
      break;
    case Corpus::kAmi:
      m.file_globs = {"*.dialog-act.xml"};
      break;
    case Corpus::kVerbMobil:
      m.file_globs = {"*.trl"};
      break;
    case Corpus::kOasis:
      m.file_globs = {"*.xml"};
      break;
    case Corpus::kDialogBank:
      m.file_globs = {"*.diaml"};
      break;
    case Corpus::kCapc:
    case Corpus::kSLogs:
      m.file_globs = {"*.tsv"};
      break;
    case Corpus::kCustom:
      m.file_globs = {"*.jsonl"};
      break;
  }
  return m;
}

std::string CorpusManifest::ToJson() const {
  nlohmann::ordered_json j;
  j["corpus"] = std::string(CorpusName(corpus));
  j["file_globs"] = file_globs;
  j["expected_dialogues"] =
      expected_dialogues ? nlohmann::ordered_json(*expected_dialogues) : nullptr;
  j["expected_utterances"] =
      expected_utterances ? nlohmann::ordered_json(*expected_utterances) : nullptr;
  j["split_file"] = split_file ? nlohmann::ordered_json(*split_file) : nullptr;
  j["expected_splits"] = expected_splits;
  j["mode"] = annotated ? "annotated" : "raw";
  j["ws97"] = ws97;
  return j.dump(2);
}

std::vector<std::string> MatchFiles(const std::string &root,
                                    const std::vector<std::string> &globs) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root, "not a directory");
  std::vector<std::pair<std::string, std::string>> found;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw IoError(root, ec.message());
    if (!it->is_regular_file()) continue;
    std::string rel = fs::relative(it->path(), root).generic_string();
    for (const auto &g : globs) {
      if (fnmatch(g.c_str(), rel.c_str(), 0) == 0) {
        found.emplace_back(rel, it->path().string());
        break;
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> files;
  for (auto &[rel, path] : found) files.push_back(std::move(path));
  return files;
}

// ---------------------------------------------------------------------------
// SWDA

DialogueCollection ReadSwda(const std::vector<std::string> &files, bool ws97) {
  static const std::regex kLine(R"(^(\S+)\s+([A-Za-z]+)\.(\d+)\s+utt(\d+):\s?(.*)$)");
  static const std::regex kFilename(R"(^FILENAME:\s*(\d+)_.*$)");
  DialogueCollection out;
  for (const auto &path : files) {
    std::ifstream in = OpenText(path);
    UnifiedDialogue d;
    d.corpus = Corpus::kSwda;
    d.dialogue_id = FileStem(path);
    bool in_body = false;
    int merged = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::smatch m;
      if (!in_body) {
        if (std::regex_match(line, m, kFilename)) d.dialogue_id = "sw" + std::string(m[1]);
        if (line.size() >= 10 && line.find_first_not_of('=') == std::string::npos) {
          in_body = true;
        }
        continue;
      }
      if (Trim(line).empty()) continue;
      if (!std::regex_match(line, m, kLine)) {
        throw ParseError(path + ":" + std::to_string(lineno), "malformed utterance line");
      }
      std::string tag = m[1];
      std::string speaker = m[2];
      std::string text = Trim(std::string(m[5]));
      if (ws97 && tag == "+") {
        // Continuation of the same speaker's interrupted unit.
        auto ante = std::find_if(d.utterances.rbegin(), d.utterances.rend(),
                                 [&](const Utterance &u) { return u.speaker == speaker; });
        if (ante != d.utterances.rend()) {
          ante->raw_text += (ante->raw_text.empty() ? "" : " ") + text;
          ++merged;
          continue;
        }
      }
      Utterance u;
      u.utterance_id = speaker + "." + std::string(m[3]) + ".utt" + std::string(m[4]);
      u.speaker = speaker;
      u.raw_text = text;
      u.source_tags.push_back({"SWDA-DAMSL", tag});
      d.utterances.push_back(std::move(u));
    }
    if (!in_body) {
      throw ParseError(path, "missing '====' header separator");
    }
    if (ws97) d.metadata["ws97_merged"] = std::to_string(merged);
    Renumber(d);
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// MapTask

namespace {

struct TimedUnit {
  double start = 0.0;
  size_t speaker_rank = 0;
  size_t order = 0;
  Utterance utterance;
};

void SortAndAppend(std::map<std::string, std::vector<TimedUnit>> &by_dialogue,
                   Corpus corpus, DialogueCollection &out) {
  for (auto &[id, units] : by_dialogue) {
    std::stable_sort(units.begin(), units.end(), [](const TimedUnit &a, const TimedUnit &b) {
      if (a.start != b.start) return a.start < b.start;
      if (a.speaker_rank != b.speaker_rank) return a.speaker_rank < b.speaker_rank;
      return a.order < b.order;
    });
    UnifiedDialogue d;
    d.corpus = corpus;
    d.dialogue_id = id;
    for (auto &unit : units) d.utterances.push_back(std::move(unit.utterance));
    Renumber(d);
    out.push_back(std::move(d));
  }
}

double ParseTime(const std::string &s, const std::string &locator) {
  if (s.empty()) return 0.0;
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ParseError(locator, "bad time value '" + s + "'");
  }
}

}  // namespace

DialogueCollection ReadMapTask(const std::vector<std::string> &files) {
  std::map<std::string, std::vector<TimedUnit>> by_dialogue;
  std::map<std::string, LeafFile> leaf_cache;
  for (size_t f = 0; f < files.size(); ++f) {
    const std::string &path = files[f];
    std::string name = fs::path(path).filename().string();
    // q1ec1.g.moves.xml
    size_t d1 = name.find('.');
    size_t d2 = name.find('.', d1 + 1);
    if (d1 == std::string::npos || d2 == std::string::npos) {
      throw ParseError(path, "expected <dialogue>.<speaker>.moves.xml");
    }
    std::string dialogue = name.substr(0, d1);
    std::string speaker = name.substr(d1 + 1, d2 - d1 - 1);
    pt::ptree tree = ReadXml(path);
    size_t order = 0;
    VisitElements(tree, [&](const std::string &elem, const pt::ptree &node) {
      if (LocalName(elem) != "move") return;
      std::string id = Attr(node, "id");
      std::string loc = path + "#" + id;
      std::string label = Attr(node, "label");
      std::vector<std::string> texts;
      for (const auto &[cname, child] : node) {
        if (LocalName(cname) != "child") continue;
        Href href = ParseHref(Attr(child, "href"), loc);
        std::string leaf_path = ResolveNxtPath(path, href.file, "timed-units");
        auto it = leaf_cache.find(leaf_path);
        if (it == leaf_cache.end()) {
          it = leaf_cache.emplace(leaf_path, LoadLeafFile(leaf_path)).first;
        }
        texts.push_back(ResolveRange(it->second, href, "tu", loc));
      }
      TimedUnit unit;
      unit.start = ParseTime(Attr(node, "start"), loc);
      unit.speaker_rank = f;
      unit.order = order++;
      unit.utterance.utterance_id = id;
      unit.utterance.speaker = speaker;
      std::string text;
      for (const auto &t : texts) {
        if (t.empty()) continue;
        if (!text.empty()) text.push_back(' ');
        text += t;
      }
      unit.utterance.raw_text = text;
      if (!label.empty()) unit.utterance.source_tags.push_back({"MAPTASK", label});
      by_dialogue[dialogue].push_back(std::move(unit));
    });
  }
  DialogueCollection out;
  SortAndAppend(by_dialogue, Corpus::kMapTask, out);
  return out;
}

// ---------------------------------------------------------------------------
// AMI

namespace {

std::map<std::string, std::string> LoadDaTypes(const std::string &path) {
  pt::ptree tree = ReadXml(path);
  std::map<std::string, std::string> types;
  VisitElements(tree, [&](const std::string &, const pt::ptree &node) {
    std::string id = Attr(node, "id");
    std::string gloss = Attr(node, "gloss");
    if (!id.empty() && !gloss.empty()) types[id] = gloss;
  });
  return types;
}

std::string FindOntology(const std::string &from_file, const std::string &target) {
  fs::path base = fs::path(from_file).parent_path();
  for (fs::path candidate : {base / target, base.parent_path() / "ontologies" / target,
                             base / "ontologies" / target}) {
    if (fs::exists(candidate)) return candidate.string();
  }
  return (base / target).string();
}

}  // namespace

DialogueCollection ReadAmi(const std::vector<std::string> &files) {
  std::map<std::string, std::vector<TimedUnit>> by_dialogue;
  std::map<std::string, LeafFile> leaf_cache;
  std::map<std::string, std::map<std::string, std::string>> ontology_cache;
  for (size_t f = 0; f < files.size(); ++f) {
    const std::string &path = files[f];
    std::string name = fs::path(path).filename().string();
    size_t d1 = name.find('.');
    size_t d2 = name.find('.', d1 + 1);
    if (d1 == std::string::npos || d2 == std::string::npos) {
      throw ParseError(path, "expected <meeting>.<speaker>.dialog-act.xml");
    }
    std::string meeting = name.substr(0, d1);
    std::string speaker = name.substr(d1 + 1, d2 - d1 - 1);
    pt::ptree tree = ReadXml(path);
    size_t order = 0;
    VisitElements(tree, [&](const std::string &elem, const pt::ptree &node) {
      if (LocalName(elem) != "dact") return;
      std::string id = Attr(node, "id");
      std::string loc = path + "#" + id;
      TimedUnit unit;
      unit.speaker_rank = f;
      unit.order = order++;
      unit.utterance.utterance_id = id;
      unit.utterance.speaker = speaker;
      std::string text;
      bool have_start = false;
      for (const auto &[cname, child] : node) {
        std::string_view local = LocalName(cname);
        if (local == "pointer" && Attr(child, "role") == "da-aspect") {
          Href href = ParseHref(Attr(child, "href"), loc);
          std::string onto_path = FindOntology(path, href.file);
          auto it = ontology_cache.find(onto_path);
          if (it == ontology_cache.end()) {
            it = ontology_cache.emplace(onto_path, LoadDaTypes(onto_path)).first;
          }
          auto type = it->second.find(href.first_id);
          if (type == it->second.end()) {
            throw ParseError(loc, "unknown dialogue act type " + href.first_id);
          }
          unit.utterance.source_tags.push_back({"AMI", type->second});
        } else if (local == "child") {
          Href href = ParseHref(Attr(child, "href"), loc);
          std::string leaf_path = ResolveNxtPath(path, href.file, "words");
          auto it = leaf_cache.find(leaf_path);
          if (it == leaf_cache.end()) {
            it = leaf_cache.emplace(leaf_path, LoadLeafFile(leaf_path)).first;
          }
          std::string piece = ResolveRange(it->second, href, "w", loc);
          if (!have_start) {
            unit.start = ParseTime(it->second.starts[it->second.index.at(href.first_id)], loc);
            have_start = true;
          }
          if (!piece.empty()) {
            if (!text.empty()) text.push_back(' ');
            text += piece;
          }
        }
      }
      unit.utterance.raw_text = text;
      by_dialogue[meeting].push_back(std::move(unit));
    });
  }
  DialogueCollection out;
  SortAndAppend(by_dialogue, Corpus::kAmi, out);
  return out;
}

// ---------------------------------------------------------------------------
// VerbMobil

DialogueCollection ReadVerbMobil(const std::vector<std::string> &files) {
  static const std::regex kTurn(R"(^([A-Za-z]+)(\d+):\s*(.*)$)");
  static const std::regex kMarker(R"(@\(\s*([A-Za-z_]+)[^)]*\))");
  DialogueCollection out;
  for (const auto &path : files) {
    std::ifstream in = OpenText(path);
    UnifiedDialogue d;
    d.corpus = Corpus::kVerbMobil;
    d.dialogue_id = FileStem(path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (Trim(line).empty() || line[0] == '#') continue;
      std::smatch m;
      if (!std::regex_match(line, m, kTurn)) {
        throw ParseError(path + ":" + std::to_string(lineno), "expected '<turn-id>: <text>'");
      }
      std::string speaker = m[1];
      std::string turn = std::string(m[1]) + std::string(m[2]);
      std::string body = m[3];
      int segment = 0;
      auto begin = std::sregex_iterator(body.begin(), body.end(), kMarker);
      size_t last = 0;
      for (auto it = begin; it != std::sregex_iterator(); ++it) {
        std::string text = Trim(body.substr(last, it->position() - last));
        last = it->position() + it->length();
        Utterance u;
        u.utterance_id = turn + "." + std::to_string(++segment);
        u.speaker = speaker;
        u.raw_text = CollapseSpaces(text);
        u.source_tags.push_back({"VERBMOBIL", (*it)[1]});
        d.utterances.push_back(std::move(u));
      }
      if (!Trim(body.substr(last)).empty()) {
        throw ParseError(path + ":" + std::to_string(lineno),
                         "text after the last dialogue act marker");
      }
    }
    Renumber(d);
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// BT Oasis

DialogueCollection ReadOasis(const std::vector<std::string> &files) {
  DialogueCollection out;
  for (const auto &path : files) {
    pt::ptree tree = ReadXml(path);
    int anonymous = 0;
    auto read_dialogue = [&](const pt::ptree &dnode) {
      UnifiedDialogue d;
      d.corpus = Corpus::kOasis;
      d.dialogue_id = Attr(dnode, "id");
      if (d.dialogue_id.empty()) {
        d.dialogue_id = FileStem(path) + (anonymous ? "-" + std::to_string(anonymous) : "");
        ++anonymous;
      }
      for (const auto &[uname, unode] : dnode) {
        if (LocalName(uname) != "u") continue;
        std::string who = Attr(unode, "who");
        std::string turn = Attr(unode, "n");
        int seg = 0;
        for (const auto &[sname, snode] : unode) {
          if (LocalName(sname) != "s") continue;
          ++seg;
          Utterance u;
          std::string sid = Attr(snode, "n", std::to_string(seg));
          u.utterance_id = "u" + turn + ".s" + sid;
          u.speaker = who;
          u.raw_text = CollapseSpaces(snode.data());
          std::string act = Attr(snode, "sp-act");
          if (!act.empty()) u.source_tags.push_back({"SPAAC", act});
          d.utterances.push_back(std::move(u));
        }
      }
      Renumber(d);
      out.push_back(std::move(d));
    };
    bool found = false;
    VisitElements(tree, [&](const std::string &name, const pt::ptree &node) {
      if (LocalName(name) == "dialogue") {
        found = true;
        read_dialogue(node);
      }
    });
    if (!found) throw ParseError(path, "no <dialogue> element");
  }
  return out;
}

// ---------------------------------------------------------------------------
// DialogBank

DialogueCollection ReadDialogBank(const std::vector<std::string> &files) {
  DialogueCollection out;
  for (const auto &path : files) {
    pt::ptree tree = ReadXml(path);
    std::vector<std::string> word_ids;
    std::map<std::string, std::string> text_of;
    std::map<std::string, size_t> word_index;
    struct Segment {
      std::string id;
      std::string target;
    };
    std::vector<Segment> segments;
    struct Act {
      std::string target;
      std::string dimension;
      std::string function;
      std::string sender;
    };
    std::vector<Act> acts;
    VisitElements(tree, [&](const std::string &name, const pt::ptree &node) {
      std::string_view local = LocalName(name);
      std::string id = Attr(node, "id");
      if (local == "fs") {
        segments.push_back({id, Attr(node, "target")});
      } else if (local == "dialogueAct") {
        acts.push_back({Attr(node, "target"), Attr(node, "dimension"),
                        Attr(node, "communicativeFunction"), Attr(node, "sender")});
      } else if (!id.empty() && !Trim(node.data()).empty()) {
        word_index[id] = word_ids.size();
        word_ids.push_back(id);
        text_of[id] = Trim(node.data());
      }
    });
    auto strip_hash = [](std::string s) {
      if (!s.empty() && s[0] == '#') s.erase(0, 1);
      return s;
    };
    UnifiedDialogue d;
    d.corpus = Corpus::kDialogBank;
    d.dialogue_id = FileStem(path);
    int unannotated = 0;
    for (const auto &seg : segments) {
      std::string loc = path + "#" + seg.id;
      std::vector<std::string> words;
      std::stringstream ss(seg.target);
      std::string ref;
      while (ss >> ref) {
        size_t dots = ref.find("..");
        if (dots != std::string::npos) {
          std::string a = strip_hash(ref.substr(0, dots));
          std::string b = strip_hash(ref.substr(dots + 2));
          auto ia = word_index.find(a);
          auto ib = word_index.find(b);
          if (ia == word_index.end() || ib == word_index.end() || ib->second < ia->second) {
            throw ParseError(loc, "bad target range " + ref);
          }
          for (size_t i = ia->second; i <= ib->second; ++i) words.push_back(text_of[word_ids[i]]);
        } else {
          auto it = text_of.find(strip_hash(ref));
          if (it == text_of.end()) throw ParseError(loc, "dangling target " + ref);
          words.push_back(it->second);
        }
      }
      Utterance u;
      u.utterance_id = seg.id;
      for (size_t i = 0; i < words.size(); ++i) {
        if (i) u.raw_text.push_back(' ');
        u.raw_text += words[i];
      }
      for (const auto &act : acts) {
        if (strip_hash(act.target) != seg.id) continue;
        if (act.dimension.empty() || act.function.empty()) {
          throw ParseError(loc, "dialogueAct without dimension or communicativeFunction");
        }
        if (u.speaker.empty()) u.speaker = strip_hash(act.sender);
        u.source_tags.push_back({"DiAML", act.dimension + ":" + act.function});
      }
      if (u.source_tags.empty()) {
        ++unannotated;
        continue;
      }
      d.utterances.push_back(std::move(u));
    }
    if (unannotated) d.metadata["unannotated_segments"] = std::to_string(unannotated);
    Renumber(d);
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CAPC / S-Logs

DialogueCollection ReadTurnLines(const std::vector<std::string> &files,
                                 Corpus corpus, bool one_dialogue_per_line) {
  DialogueCollection out;
  for (const auto &path : files) {
    std::ifstream in = OpenText(path);
    UnifiedDialogue file_dialogue;
    file_dialogue.corpus = corpus;
    file_dialogue.dialogue_id = FileStem(path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (Trim(line).empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string f;
      while (std::getline(ss, f, '\t')) fields.push_back(f);
      if (fields.size() != 4) {
        throw ParseError(path + ":" + std::to_string(lineno),
                         "expected id<TAB>speaker<TAB>tags<TAB>text");
      }
      Utterance u;
      u.utterance_id = fields[0];
      u.speaker = fields[1];
      u.raw_text = fields[3];
      std::stringstream ts(fields[2]);
      std::string tag;
      while (std::getline(ts, tag, '|')) {
        tag = Trim(tag);
        if (!tag.empty()) u.source_tags.push_back({"S-scheme", tag});
      }
      if (one_dialogue_per_line) {
        UnifiedDialogue d;
        d.corpus = corpus;
        d.dialogue_id = file_dialogue.dialogue_id + "-" + u.utterance_id;
        d.utterances.push_back(std::move(u));
        Renumber(d);
        out.push_back(std::move(d));
      } else {
        file_dialogue.utterances.push_back(std::move(u));
      }
    }
    if (!one_dialogue_per_line) {
      Renumber(file_dialogue);
      out.push_back(std::move(file_dialogue));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::map<std::string, long> ApplySplits(DialogueCollection &dialogues,
                                        const std::string &split_path) {
  std::ifstream in = OpenText(split_path);
  std::map<std::string, std::string> split_of;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(split_path + ":" + std::to_string(lineno),
                       "expected dialogue_id<TAB>split");
    }
    split_of[line.substr(0, tab)] = Trim(line.substr(tab + 1));
  }
  std::map<std::string, long> counts;
  for (auto &d : dialogues) {
    auto it = split_of.find(d.dialogue_id);
    if (it == split_of.end()) continue;
    d.metadata[kMetaSplit] = it->second;
    ++counts[it->second];
  }
  return counts;
}

DialogueCollection ReadCorpus(const CorpusManifest &manifest,
                              const std::string &root) {
  std::vector<std::string> files = MatchFiles(root, manifest.file_globs);
  DialogueCollection dialogues;
  switch (manifest.corpus) {
    case Corpus::kSwda:
      dialogues = ReadSwda(files, manifest.ws97);
      break;
    case Corpus::kMapTask:
      dialogues = ReadMapTask(files);
      break;
    case Corpus::kAmi:
      dialogues = ReadAmi(files);
      break;
    case Corpus::kVerbMobil:
      dialogues = ReadVerbMobil(files);
      break;
    case Corpus::kOasis:
      dialogues = ReadOasis(files);
      break;
    case Corpus::kDialogBank:
      dialogues = ReadDialogBank(files);
      break;
    case Corpus::kCapc:
      dialogues = ReadTurnLines(files, Corpus::kCapc, true);
      break;
    case Corpus::kSLogs:
      dialogues = ReadTurnLines(files, Corpus::kSLogs, false);
      break;
    case Corpus::kCustom:
      for (const auto &f : files) {
        auto part = ReadDialogues(f);
        dialogues.insert(dialogues.end(), part.begin(), part.end());
      }
      break;
  }
  for (auto &d : dialogues) {
    d.metadata["source"] = std::string(CorpusName(manifest.corpus));
  }
  CheckCollection(dialogues);

  if (manifest.annotated) {
    for (const auto &d : dialogues) {
      for (const auto &u : d.utterances) {
        if (u.source_tags.empty()) {
          throw ParseError(d.dialogue_id + "#" + u.utterance_id,
                           "utterance without a dialogue act tag");
        }
      }
    }
  }
  if (manifest.expected_dialogues &&
      *manifest.expected_dialogues != static_cast<long>(dialogues.size())) {
    throw IntegrityError(std::string(CorpusName(manifest.corpus)) + " dialogues",
                         *manifest.expected_dialogues,
                         static_cast<long>(dialogues.size()));
  }
  long utterances = static_cast<long>(CountUtterances(dialogues));
  if (manifest.expected_utterances && *manifest.expected_utterances != utterances) {
    throw IntegrityError(std::string(CorpusName(manifest.corpus)) + " utterances",
                         *manifest.expected_utterances, utterances);
  }
  if (manifest.split_file) {
    fs::path split = *manifest.split_file;
    if (split.is_relative()) split = fs::path(root) / split;
    auto counts = ApplySplits(dialogues, split.string());
    for (const auto &[name, expected] : manifest.expected_splits) {
      long found = counts.count(name) ? counts[name] : 0;
      if (found != expected) {
        throw IntegrityError(std::string(CorpusName(manifest.corpus)) + " split '" +
                                 name + "' dialogues",
                             expected, found);
      }
    }
  } else if (!manifest.expected_splits.empty()) {
    throw IntegrityError(std::string(CorpusName(manifest.corpus)) +
                             " expected splits but no split_file",
                         static_cast<long>(manifest.expected_splits.size()), 0);
  }
  return dialogues;
}

// ---------------------------------------------------------------------------
// Statistics

StatReport CorpusStats(const DialogueCollection &dialogues, Level level,
                       const Taxonomy &taxonomy) {
  bool any_mapped = false;
  for (const auto &d : dialogues) {
    for (const auto &u : d.utterances) {
      if (u.mapped_tags) any_mapped = true;
    }
  }
  if (!any_mapped) {
    throw UsageError("no mapped tags present; run 'map' before 'stats'");
  }

  StatReport report;
  report.level = level;
  std::vector<std::string> categories;
  if (level == Level::kDimension) {
    for (Dimension dim : kDimensions) categories.emplace_back(DimensionName(dim));
  } else {
    categories = taxonomy.ClassifierLabels(level);
  }
  std::map<std::string, size_t> counts;
  for (const auto &d : dialogues) {
    auto it = d.metadata.find(kMetaIngested);
    report.corpus_utterances +=
        it != d.metadata.end() ? std::stoul(it->second) : d.utterances.size();
    for (const auto &u : d.utterances) {
      if (!u.mapped_tags) continue;
      std::set<std::string> seen;
      for (const auto &tag : *u.mapped_tags) {
        if (level == Level::kDimension) {
          seen.insert(std::string(DimensionName(tag.dimension)));
        } else if (taxonomy.IsClassifierLabel(tag.node, level)) {
          seen.insert(tag.node);
        }
      }
      for (const auto &c : seen) ++counts[c];
      if (!seen.empty()) ++report.covered_utterances;
    }
  }
  double denom = static_cast<double>(report.corpus_utterances);
  for (const auto &c : categories) {
    StatRow row;
    row.category = c;
    row.count = counts[c];
    row.percent = denom > 0 ? 100.0 * static_cast<double>(row.count) / denom : 0.0;
    report.total += row.count;
    report.rows.push_back(std::move(row));
  }
  report.coverage_percent =
      denom > 0 ? 100.0 * static_cast<double>(report.covered_utterances) / denom : 0.0;
  return report;
}

std::string StatReport::ToTsv() const {
  std::ostringstream out;
  char buf[64];
  out << "category\tcount\tpercent\n";
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof(buf), "%.2f", r.percent);
    out << r.category << '\t' << r.count << '\t' << buf << '\n';
  }
  out << "Total\t" << total << "\t\n";
  std::snprintf(buf, sizeof(buf), "%.2f", coverage_percent);
  out << "% of corpus\t" << covered_utterances << '\t' << buf << '\n';
  return out.str();
}

}  // namespace datag
