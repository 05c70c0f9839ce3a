#pragma once

#include <optional>
#include <string>
#include <vector>

namespace absa {

// One sentence's ordinary dependency tree. Heads use the CoNLL convention:
// 0 is the artificial root, token indices are 1-based.
struct DepParse {
  std::vector<std::string> tokens;
  std::vector<int> heads;
  std::vector<std::string> rels;

  int size() const { return static_cast<int>(tokens.size()); }
};

}  // namespace absa

namespace absa::deptree {

// ok -> nullopt; otherwise a description of the first violated property.
std::optional<std::string> validate_tree(const DepParse& parse);

// Undirected adjacency over token indices 1..n, built from a valid parse.
class TreeView {
 public:
  explicit TreeView(const DepParse& parse);
  int size() const { return n_; }
  const std::vector<int>& neighbors(int i) const;

 private:
  int n_;
  std::vector<std::vector<int>> adj_;  // index 0 unused
};

// Length of the unique undirected path between i and j; distance(i, i) = 0.
// BFS per call; trees here are tiny.
int tree_distance(const TreeView& view, int i, int j);

}  // namespace absa::deptree
