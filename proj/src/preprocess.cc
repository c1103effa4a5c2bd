#include "datag/preprocess.h"

#include <fstream>
#include <sstream>

#include "datag/errors.h"

namespace datag {

namespace {

bool IsAsciiAlpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool IsAsciiDigit(char c) { return c >= '0' && c <= '9'; }
bool IsAsciiUpper(char c) { return c >= 'A' && c <= 'Z'; }
bool IsNonAscii(char c) { return static_cast<unsigned char>(c) >= 0x80; }

// Deletes <...> spans (nesting aware) and brace codes "{X" while keeping the
// braced content.
std::string StripMarkup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '<') {
      int depth = 0;
      size_t j = i;
      for (; j < text.size(); ++j) {
        if (text[j] == '<') ++depth;
        if (text[j] == '>' && --depth == 0) break;
      }
      if (j < text.size()) {
        out.push_back(' ');
        i = j + 1;
        continue;
      }
      // Unbalanced: drop the bracket only.
      out.push_back(' ');
      ++i;
      continue;
    }
    if (c == '{') {
      ++i;
      while (i < text.size() && IsAsciiUpper(text[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

}  // namespace

std::string Normalize(std::string_view text, const NormalizationConfig &cfg) {
  std::string s;
  if (cfg.strip_special) {
    std::string stripped = StripMarkup(text);
    s.reserve(stripped.size());
    for (char c : stripped) {
      if (!IsNonAscii(c)) s.push_back(c);
    }
  } else {
    s.assign(text);
  }

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (IsAsciiAlpha(c) || IsAsciiDigit(c) || IsNonAscii(c)) {
      current.push_back(c);
    } else if (c == '\'' && cfg.keep_apostrophes && i > 0 && i + 1 < s.size() &&
               IsAsciiAlpha(s[i - 1]) && IsAsciiAlpha(s[i + 1])) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();

  std::string out;
  for (auto &tok : tokens) {
    bool keep_case = cfg.preserve_I && tok == "I";
    if (cfg.lowercase && !keep_case) {
      for (char &c : tok) {
        if (IsAsciiUpper(c)) c = static_cast<char>(c - 'A' + 'a');
      }
    }
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

std::vector<std::string> SplitTokens(std::string_view normalized) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && normalized[i] == ' ') ++i;
    size_t j = i;
    while (j < normalized.size() && normalized[j] != ' ') ++j;
    if (j > i) tokens.emplace_back(normalized.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string SwdaBaseTag(std::string_view raw_tag) {
  // First of a comma/semicolon separated list.
  size_t end = raw_tag.find_first_of(",;");
  std::string_view first = raw_tag.substr(0, end);
  while (!first.empty() && first.front() == ' ') first.remove_prefix(1);
  while (!first.empty() && first.back() == ' ') first.remove_suffix(1);
  std::string tag(first);

  if (tag == "qy^d" || tag == "qw^d" || tag == "b^m") return tag;
  if (tag == "nn^e") return "ng";
  if (tag == "ny^e") return "na";

  size_t caret = tag.find('^', 1);
  if (caret != std::string::npos) tag.resize(caret);
  std::string out;
  for (char c : tag) {
    if (c != '(' && c != ')' && c != '@' && c != '*') out.push_back(c);
  }
  return out;
}

SwdaCollapser SwdaCollapser::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open collapse table");
  std::map<std::string, std::string> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno), "expected raw<TAB>collapsed");
    }
    std::string raw = line.substr(0, tab);
    std::string collapsed = line.substr(tab + 1);
    size_t tab2 = collapsed.find('\t');
    if (tab2 != std::string::npos) collapsed.resize(tab2);
    if (!table.emplace(raw, collapsed).second) {
      throw ParseError(path + ":" + std::to_string(lineno), "duplicate raw tag " + raw);
    }
  }
  return FromEntries(std::move(table));
}

SwdaCollapser SwdaCollapser::FromEntries(std::map<std::string, std::string> table) {
  SwdaCollapser c;
  for (auto &[k, v] : table) c.table_.emplace(k, v);
  return c;
}

std::string SwdaCollapser::Collapse(std::string_view raw_tag) const {
  std::string base = SwdaBaseTag(raw_tag);
  auto it = table_.find(base);
  if (it == table_.end()) {
    throw DataError("SWDA tag '" + std::string(raw_tag) +
                    "' is not covered by the WS97 collapse table");
  }
  return it->second;
}

bool SwdaCollapser::Covers(std::string_view raw_tag) const {
  return table_.find(SwdaBaseTag(raw_tag)) != table_.end();
}

std::set<std::string> SwdaCollapser::Image() const {
  std::set<std::string> image;
  for (const auto &[k, v] : table_) image.insert(v);
  return image;
}

void NormalizeCollection(DialogueCollection &dialogues,
                         const NormalizationConfig &cfg) {
#pragma omp parallel for schedule(dynamic)
  for (size_t d = 0; d < dialogues.size(); ++d) {
    for (auto &u : dialogues[d].utterances) {
      u.normalized_text = Normalize(u.raw_text, cfg);
    }
  }
}

size_t DropEmpty(DialogueCollection &dialogues) {
  size_t dropped = 0;
  for (auto &d : dialogues) {
    std::vector<Utterance> kept;
    kept.reserve(d.utterances.size());
    for (auto &u : d.utterances) {
      if (!u.normalized_text) {
        throw UsageError("utterance " + u.utterance_id +
                         " has no normalized text; run preprocess first");
      }
      if (u.normalized_text->empty()) {
        ++dropped;
        continue;
      }
      kept.push_back(std::move(u));
    }
    for (size_t i = 0; i < kept.size(); ++i) kept[i].position = static_cast<int>(i);
    d.utterances = std::move(kept);
  }
  return dropped;
}

}  // namespace datag
