#ifndef DATAG_TAXONOMY_H_
#define DATAG_TAXONOMY_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "datag/dialogue.h"

namespace datag {

// Classification levels at which a taxonomy node can act as a label.
enum class Level { kDimension, kTaskFunction, kSomFunction, kFeedback };

std::string_view LevelName(Level level);  // dimension, task_function, ...
Level ParseLevel(std::string_view name);
// The level whose labels are the communicative functions of `dim`.
Level FunctionLevel(Dimension dim);

struct TaxonomyNode {
  std::string id;
  Dimension dimension = Dimension::kTask;
  std::optional<std::string> parent;
  std::set<Level> classifier_levels;

  bool IsClassifierLabel(Level level) const {
    return classifier_levels.count(level) > 0;
  }
};

// Task function labels used by the function experiments, in canonical order.
const std::vector<std::string> &TaskFunctionLabels();
const std::vector<std::string> &SomFunctionLabels();

// The scheme as a forest of three trees, one per dimension. Immutable after
// construction; all constructors validate.
class Taxonomy {
 public:
  // Tab-separated "id, dimension, parent|-, levels|-" lines, '#' comments.
  static Taxonomy Load(const std::string &path);
  static Taxonomy Parse(std::istream &in, const std::string &name);
  // Throws ValidationError naming the node on duplicate ids, orphan parents,
  // cycles, dimension mismatches, or a dimension without exactly one root.
  static Taxonomy FromNodes(std::vector<TaxonomyNode> nodes);

  const TaxonomyNode *Find(std::string_view id) const;
  const TaxonomyNode &Get(std::string_view id) const;  // throws
  bool Contains(std::string_view id) const { return Find(id) != nullptr; }
  bool IsClassifierLabel(std::string_view id, Level level) const;

  const std::vector<TaxonomyNode> &nodes() const { return nodes_; }
  std::vector<const TaxonomyNode *> NodesOf(Dimension dim) const;
  std::vector<std::string> Children(std::string_view id) const;
  bool IsLeaf(std::string_view id) const { return Children(id).empty(); }
  const TaxonomyNode &Root(Dimension dim) const;

  // Labels at `level` in file order.
  std::vector<std::string> ClassifierLabels(Level level) const;
  // Labels from `required` that are missing at `level`.
  std::vector<std::string> MissingLabels(
      Level level, const std::vector<std::string> &required) const;

  // Writes the file format accepted by Parse.
  void Write(std::ostream &out) const;

 private:
  std::vector<TaxonomyNode> nodes_;
  std::map<std::string, size_t, std::less<>> index_;
};

}  // namespace datag

#endif  // DATAG_TAXONOMY_H_
