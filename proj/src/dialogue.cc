#include "datag/dialogue.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "datag/errors.h"
#include "json.hpp"

namespace datag {

using Json = nlohmann::ordered_json;

namespace {

struct CorpusEntry {
  Corpus corpus;
  std::string_view name;
};

constexpr CorpusEntry kCorpusNames[] = {
    {Corpus::kSwda, "SWDA"},           {Corpus::kAmi, "AMI"},
    {Corpus::kMapTask, "MAPTASK"},     {Corpus::kVerbMobil, "VERBMOBIL"},
    {Corpus::kOasis, "OASIS"},         {Corpus::kDialogBank, "DIALOGBANK"},
    {Corpus::kCapc, "CAPC"},           {Corpus::kSLogs, "SLOGS"},
    {Corpus::kCustom, "CUSTOM"},
};

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Json TokensToJson(const std::vector<TokenAnnotation> &tokens) {
  Json arr = Json::array();
  for (const auto &t : tokens) {
    Json j;
    j["index"] = t.index;
    j["form"] = t.form;
    j["pos"] = t.pos;
    j["dep_relation"] = t.dep_relation;
    if (t.head == kRootHead) {
      j["head"] = "ROOT";
    } else {
      j["head"] = t.head;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<TokenAnnotation> TokensFromJson(const Json &arr) {
  std::vector<TokenAnnotation> tokens;
  for (const auto &j : arr) {
    TokenAnnotation t;
    t.index = j.at("index").get<int>();
    t.form = j.at("form").get<std::string>();
    t.pos = j.at("pos").get<std::string>();
    t.dep_relation = j.at("dep_relation").get<std::string>();
    const Json &head = j.at("head");
    t.head = head.is_string() ? kRootHead : head.get<int>();
    tokens.push_back(std::move(t));
  }
  return tokens;
}

}  // namespace

std::string_view CorpusName(Corpus corpus) {
  for (const auto &e : kCorpusNames) {
    if (e.corpus == corpus) return e.name;
  }
  return "CUSTOM";
}

Corpus ParseCorpus(std::string_view name) {
  std::string up = Upper(name);
  if (up == "S-LOGS") up = "SLOGS";
  if (up == "DB") up = "DIALOGBANK";
  if (up == "MT") up = "MAPTASK";
  if (up == "VM") up = "VERBMOBIL";
  for (const auto &e : kCorpusNames) {
    if (e.name == up) return e.corpus;
  }
  throw UsageError("unknown corpus '" + std::string(name) + "'");
}

const std::vector<Corpus> &AllCorpora() {
  static const std::vector<Corpus> all = [] {
    std::vector<Corpus> v;
    for (const auto &e : kCorpusNames) v.push_back(e.corpus);
    return v;
  }();
  return all;
}

std::string_view DimensionName(Dimension dim) {
  switch (dim) {
    case Dimension::kTask:
      return "TASK";
    case Dimension::kSom:
      return "SOM";
    case Dimension::kFeedback:
      return "FEEDBACK";
  }
  return "TASK";
}

Dimension ParseDimension(std::string_view name) {
  std::string up = Upper(name);
  if (up == "TASK" || up == "GENERAL") return Dimension::kTask;
  if (up == "SOM") return Dimension::kSom;
  if (up == "FEEDBACK") return Dimension::kFeedback;
  throw ValidationError("unknown dimension '" + std::string(name) + "'");
}

std::string DATag::ToString() const {
  return std::string(DimensionName(dimension)) + ":" + node;
}

std::string DialogueToJsonLine(const UnifiedDialogue &d) {
  Json j;
  j["dialogue_id"] = d.dialogue_id;
  j["corpus"] = std::string(CorpusName(d.corpus));
  Json meta = Json::object();
  for (const auto &[k, v] : d.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  Json utts = Json::array();
  for (const auto &u : d.utterances) {
    Json ju;
    ju["utterance_id"] = u.utterance_id;
    ju["speaker"] = u.speaker;
    ju["position"] = u.position;
    ju["raw_text"] = u.raw_text;
    Json tags = Json::array();
    for (const auto &t : u.source_tags) tags.push_back(Json::array({t.scheme, t.tag}));
    ju["source_tags"] = std::move(tags);
    ju["normalized_text"] =
        u.normalized_text ? Json(*u.normalized_text) : Json(nullptr);
    ju["tokens"] = u.tokens ? TokensToJson(*u.tokens) : Json(nullptr);
    if (u.mapped_tags) {
      Json mapped = Json::array();
      for (const auto &t : *u.mapped_tags) mapped.push_back(t.ToString());
      ju["mapped_tags"] = std::move(mapped);
    } else {
      ju["mapped_tags"] = nullptr;
    }
    utts.push_back(std::move(ju));
  }
  j["utterances"] = std::move(utts);
  return j.dump();
}

UnifiedDialogue DialogueFromJsonLine(std::string_view line,
                                     const std::string &locator) {
  UnifiedDialogue d;
  try {
    Json j = Json::parse(line);
    d.dialogue_id = j.at("dialogue_id").get<std::string>();
    d.corpus = ParseCorpus(j.at("corpus").get<std::string>());
    if (j.contains("metadata")) {
      for (const auto &[k, v] : j["metadata"].items()) {
        d.metadata[k] = v.get<std::string>();
      }
    }
    for (const auto &ju : j.at("utterances")) {
      Utterance u;
      u.utterance_id = ju.at("utterance_id").get<std::string>();
      u.speaker = ju.at("speaker").get<std::string>();
      u.position = ju.at("position").get<int>();
      u.raw_text = ju.at("raw_text").get<std::string>();
      for (const auto &t : ju.at("source_tags")) {
        u.source_tags.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>()});
      }
      if (ju.contains("normalized_text") && !ju["normalized_text"].is_null()) {
        u.normalized_text = ju["normalized_text"].get<std::string>();
      }
      if (ju.contains("tokens") && !ju["tokens"].is_null()) {
        u.tokens = TokensFromJson(ju["tokens"]);
      }
      if (ju.contains("mapped_tags") && !ju["mapped_tags"].is_null()) {
        std::vector<DATag> tags;
        for (const auto &t : ju["mapped_tags"]) {
          std::string s = t.get<std::string>();
          size_t colon = s.find(':');
          if (colon == std::string::npos) {
            throw ParseError(locator, "mapped tag without dimension: " + s);
          }
          tags.push_back({ParseDimension(s.substr(0, colon)), s.substr(colon + 1)});
        }
        u.mapped_tags = std::move(tags);
      }
      d.utterances.push_back(std::move(u));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(locator, e.what());
  } catch (const UsageError &e) {
    throw ParseError(locator, e.what());
  }
  return d;
}

void WriteDialogues(std::ostream &out, const DialogueCollection &dialogues) {
  for (const auto &d : dialogues) out << DialogueToJsonLine(d) << '\n';
}

void WriteDialogues(const std::string &path,
                    const DialogueCollection &dialogues) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  WriteDialogues(out, dialogues);
  if (!out) throw IoError(path, "write failed");
}

DialogueCollection ReadDialogues(std::istream &in, const std::string &name) {
  DialogueCollection out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(DialogueFromJsonLine(line, name + ":" + std::to_string(lineno)));
  }
  return out;
}

DialogueCollection ReadDialogues(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return ReadDialogues(in, path);
}

void CheckCollection(const DialogueCollection &dialogues) {
  std::set<std::string> ids;
  for (const auto &d : dialogues) {
    if (!ids.insert(d.dialogue_id).second) {
      throw ValidationError("duplicate dialogue id " + d.dialogue_id);
    }
    for (size_t i = 0; i < d.utterances.size(); ++i) {
      if (d.utterances[i].position != static_cast<int>(i)) {
        throw ValidationError("dialogue " + d.dialogue_id +
                              ": non-consecutive position at utterance " +
                              d.utterances[i].utterance_id);
      }
    }
  }
}

size_t CountUtterances(const DialogueCollection &dialogues) {
  size_t n = 0;
  for (const auto &d : dialogues) n += d.utterances.size();
  return n;
}

}  // namespace datag
