#include "absa/deptree.hpp"

#include <deque>
#include <stdexcept>

namespace absa::deptree {

std::optional<std::string> validate_tree(const DepParse& parse) {
  int n = parse.size();
  if (n == 0) return "empty sentence";
  if (static_cast<int>(parse.heads.size()) != n ||
      static_cast<int>(parse.rels.size()) != n)
    return "tokens/heads/rels length mismatch";

  int root = 0;
  for (int i = 1; i <= n; ++i) {
    int h = parse.heads[static_cast<size_t>(i - 1)];
    if (h < 0 || h > n)
      return "head index out of range at token " + std::to_string(i);
    if (h == i) return "token " + std::to_string(i) + " is its own head";
    if (h == 0) {
      if (root != 0)
        return "two roots: tokens " + std::to_string(root) + " and " + std::to_string(i);
      root = i;
    }
  }
  if (root == 0) return "no root (no token with head 0)";

  // Follow head links from every token; a tree reaches the root from
  // everywhere without revisiting.
  for (int i = 1; i <= n; ++i) {
    std::vector<bool> seen(static_cast<size_t>(n + 1), false);
    int cur = i;
    while (cur != 0) {
      if (seen[static_cast<size_t>(cur)])
        return "cycle through token " + std::to_string(cur);
      seen[static_cast<size_t>(cur)] = true;
      cur = parse.heads[static_cast<size_t>(cur - 1)];
    }
  }
  return std::nullopt;
}

TreeView::TreeView(const DepParse& parse) : n_(parse.size()) {
  adj_.assign(static_cast<size_t>(n_ + 1), {});
  for (int i = 1; i <= n_; ++i) {
    int h = parse.heads[static_cast<size_t>(i - 1)];
    if (h == 0) continue;
    adj_[static_cast<size_t>(i)].push_back(h);
    adj_[static_cast<size_t>(h)].push_back(i);
  }
}

const std::vector<int>& TreeView::neighbors(int i) const {
  if (i < 1 || i > n_) throw std::out_of_range("TreeView: node index out of range");
  return adj_[static_cast<size_t>(i)];
}

int tree_distance(const TreeView& view, int i, int j) {
  int n = view.size();
  if (i < 1 || i > n || j < 1 || j > n)
    throw std::out_of_range("tree_distance: index out of range");
  if (i == j) return 0;
  std::vector<int> dist(static_cast<size_t>(n + 1), -1);
  std::deque<int> q{i};
  dist[static_cast<size_t>(i)] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v : view.neighbors(u)) {
      if (dist[static_cast<size_t>(v)] != -1) continue;
      dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
      if (v == j) return dist[static_cast<size_t>(v)];
      q.push_back(v);
    }
  }
  throw std::logic_error("tree_distance: nodes not connected");
}

}  // namespace absa::deptree
