#include "datag/taxonomy.h"

#include <fstream>
#include <sstream>

#include "datag/errors.h"

namespace datag {

namespace {

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, '\t')) fields.push_back(f);
  return fields;
}

}  // namespace

std::string_view LevelName(Level level) {
  switch (level) {
    case Level::kDimension:
      return "dimension";
    case Level::kTaskFunction:
      return "task_function";
    case Level::kSomFunction:
      return "som_function";
    case Level::kFeedback:
      return "feedback";
  }
  return "dimension";
}

Level ParseLevel(std::string_view name) {
  if (name == "dimension") return Level::kDimension;
  if (name == "task_function" || name == "task") return Level::kTaskFunction;
  if (name == "som_function" || name == "som") return Level::kSomFunction;
  if (name == "feedback") return Level::kFeedback;
  throw UsageError("unknown level '" + std::string(name) + "'");
}

Level FunctionLevel(Dimension dim) {
  switch (dim) {
    case Dimension::kTask:
      return Level::kTaskFunction;
    case Dimension::kSom:
      return Level::kSomFunction;
    case Dimension::kFeedback:
      return Level::kFeedback;
  }
  return Level::kTaskFunction;
}

const std::vector<std::string> &TaskFunctionLabels() {
  static const std::vector<std::string> labels = {
      "Inform", "PropQ", "SetQ", "ChoiceQ", "Commissive", "Directive"};
  return labels;
}

const std::vector<std::string> &SomFunctionLabels() {
  static const std::vector<std::string> labels = {"Salutation", "Apology",
                                                  "Thanking"};
  return labels;
}

Taxonomy Taxonomy::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open taxonomy");
  return Parse(in, path);
}

Taxonomy Taxonomy::Parse(std::istream &in, const std::string &name) {
  std::vector<TaxonomyNode> nodes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitTabs(line);
    std::string loc = name + ":" + std::to_string(lineno);
    if (fields.size() != 4) {
      throw ParseError(loc, "expected 4 tab-separated fields");
    }
    TaxonomyNode node;
    node.id = fields[0];
    try {
      node.dimension = ParseDimension(fields[1]);
    } catch (const ValidationError &e) {
      throw ParseError(loc, e.what());
    }
    if (fields[2] != "-") node.parent = fields[2];
    if (fields[3] != "-") {
      std::stringstream ls(fields[3]);
      std::string lv;
      while (std::getline(ls, lv, ',')) {
        try {
          node.classifier_levels.insert(ParseLevel(lv));
        } catch (const UsageError &e) {
          throw ParseError(loc, e.what());
        }
      }
    }
    nodes.push_back(std::move(node));
  }
  return FromNodes(std::move(nodes));
}

Taxonomy Taxonomy::FromNodes(std::vector<TaxonomyNode> nodes) {
  Taxonomy t;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (!t.index_.emplace(nodes[i].id, i).second) {
      throw ValidationError("taxonomy: duplicate node id '" + nodes[i].id + "'");
    }
  }
  for (const auto &n : nodes) {
    if (!n.parent) continue;
    if (*n.parent == n.id) {
      throw ValidationError("taxonomy: node '" + n.id + "' is its own parent");
    }
    auto it = t.index_.find(*n.parent);
    if (it == t.index_.end()) {
      throw ValidationError("taxonomy: node '" + n.id + "' has unknown parent '" +
                            *n.parent + "'");
    }
    if (nodes[it->second].dimension != n.dimension) {
      throw ValidationError("taxonomy: node '" + n.id +
                            "' has a different dimension than its parent");
    }
  }
  // Walk up from every node; a path longer than the node count is a cycle.
  for (const auto &n : nodes) {
    const TaxonomyNode *cur = &n;
    size_t steps = 0;
    while (cur->parent) {
      cur = &nodes[t.index_.find(*cur->parent)->second];
      if (++steps > nodes.size()) {
        throw ValidationError("taxonomy: cycle through node '" + n.id + "'");
      }
    }
  }
  for (Dimension dim : kDimensions) {
    int roots = 0;
    for (const auto &n : nodes) {
      if (n.dimension == dim && !n.parent) ++roots;
    }
    if (roots != 1) {
      throw ValidationError("taxonomy: dimension " + std::string(DimensionName(dim)) +
                            " must have exactly one root, found " +
                            std::to_string(roots));
    }
  }
  t.nodes_ = std::move(nodes);
  return t;
}

const TaxonomyNode *Taxonomy::Find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const TaxonomyNode &Taxonomy::Get(std::string_view id) const {
  const TaxonomyNode *n = Find(id);
  if (n == nullptr) {
    throw ValidationError("taxonomy: unknown node '" + std::string(id) + "'");
  }
  return *n;
}

bool Taxonomy::IsClassifierLabel(std::string_view id, Level level) const {
  const TaxonomyNode *n = Find(id);
  return n != nullptr && n->IsClassifierLabel(level);
}

std::vector<const TaxonomyNode *> Taxonomy::NodesOf(Dimension dim) const {
  std::vector<const TaxonomyNode *> out;
  for (const auto &n : nodes_) {
    if (n.dimension == dim) out.push_back(&n);
  }
  return out;
}

std::vector<std::string> Taxonomy::Children(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto &n : nodes_) {
    if (n.parent && *n.parent == id) out.push_back(n.id);
  }
  return out;
}

const TaxonomyNode &Taxonomy::Root(Dimension dim) const {
  for (const auto &n : nodes_) {
    if (n.dimension == dim && !n.parent) return n;
  }
  throw ValidationError("taxonomy: no root");  // unreachable after validation
}

std::vector<std::string> Taxonomy::ClassifierLabels(Level level) const {
  std::vector<std::string> out;
  for (const auto &n : nodes_) {
    if (n.IsClassifierLabel(level)) out.push_back(n.id);
  }
  return out;
}

std::vector<std::string> Taxonomy::MissingLabels(
    Level level, const std::vector<std::string> &required) const {
  std::vector<std::string> missing;
  for (const auto &r : required) {
    if (!IsClassifierLabel(r, level)) missing.push_back(r);
  }
  return missing;
}

void Taxonomy::Write(std::ostream &out) const {
  out << "# id\tdimension\tparent\tclassifier_levels\n";
  for (const auto &n : nodes_) {
    out << n.id << '\t' << DimensionName(n.dimension) << '\t'
        << (n.parent ? *n.parent : "-") << '\t';
    if (n.classifier_levels.empty()) {
      out << '-';
    } else {
      bool first = true;
      for (Level l : n.classifier_levels) {
        if (!first) out << ',';
        out << LevelName(l);
        first = false;
      }
    }
    out << '\n';
  }
}

}  // namespace datag
