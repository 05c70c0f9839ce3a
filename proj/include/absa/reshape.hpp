#pragma once

#include <optional>
#include <string>
#include <vector>

#include "absa/deptree.hpp"

namespace absa::reshape {

// How a child hangs off the aspect root. to_root: the child was a dependent
// of an aspect word in the original parse (its head arrow points at the
// root). from_root: the child was the head of an aspect word. virt: attached
// by a virtual n:con relation.
enum class EdgeDir { to_root, from_root, virt };

const char* dir_name(EdgeDir d);
std::optional<EdgeDir> dir_from_name(const std::string& s);

struct AspectChild {
  int token = 0;  // 1-based sentence index
  std::string relation;
  EdgeDir direction = EdgeDir::virt;
};

// The reshaped star graph: aspect span at the root, every other sentence
// token exactly once as a child.
struct AspectTree {
  int aspect_from = 0;  // 1-based, inclusive
  int aspect_to = 0;
  int n_max = 4;
  std::vector<AspectChild> children;  // ascending token order
};

// "m:con" for m <= n_max, "inf:con" beyond.
std::string ncon_label(int m, int n_max);
bool is_ncon_label(const std::string& label);

// Builds the aspect-oriented dependency tree. Tokens directly linked to an
// aspect word keep their original relation (the lowest-indexed aspect word
// wins when several connect); every other token gets n:con with n the
// minimum tree distance to the aspect words, capped at n_max.
AspectTree build(const DepParse& parse, int aspect_from, int aspect_to, int n_max = 4,
                 bool rev_suffix = false);

struct LabeledEdge {
  int head = 0;  // 1-based
  int dependent = 0;
  std::string label;
};

// Ordinary dependency tree as a labeled undirected graph (ablation input).
struct OrdinaryGraph {
  int n = 0;
  std::vector<LabeledEdge> edges;
};

OrdinaryGraph to_ordinary_graph(const DepParse& parse);

// Dense label -> index map over relation labels. Virtual labels
// 1:con..n_max:con, inf:con and the reserved self-loop label come first,
// followed by the real labels in sorted order.
class RelationVocab {
 public:
  static constexpr const char* kSelf = "self";

  static RelationVocab build(const std::vector<AspectTree>& trees, int n_max = 4,
                             const std::vector<std::string>& extra_labels = {});

  int index(const std::string& label) const;  // throws on unknown label
  std::optional<int> find(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }
  int size() const { return static_cast<int>(labels_.size()); }
  int self_index() const { return index(kSelf); }

  static RelationVocab from_labels(std::vector<std::string> labels);

 private:
  std::vector<std::string> labels_;
};

}  // namespace absa::reshape
