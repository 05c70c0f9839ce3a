#include "absa/reshape.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace absa::reshape {

const char* dir_name(EdgeDir d) {
  switch (d) {
    case EdgeDir::to_root: return "to_root";
    case EdgeDir::from_root: return "from_root";
    case EdgeDir::virt: return "virtual";
  }
  return "?";
}

std::optional<EdgeDir> dir_from_name(const std::string& s) {
  if (s == "to_root") return EdgeDir::to_root;
  if (s == "from_root") return EdgeDir::from_root;
  if (s == "virtual") return EdgeDir::virt;
  return std::nullopt;
}

std::string ncon_label(int m, int n_max) {
  if (m > n_max) return "inf:con";
  return std::to_string(m) + ":con";
}

bool is_ncon_label(const std::string& label) {
  return label.size() > 4 && label.compare(label.size() - 4, 4, ":con") == 0;
}

AspectTree build(const DepParse& parse, int aspect_from, int aspect_to, int n_max,
                 bool rev_suffix) {
  int n = parse.size();
  if (auto bad = deptree::validate_tree(parse))
    throw std::invalid_argument("reshape: invalid parse: " + *bad);
  if (aspect_from < 1 || aspect_to > n || aspect_from > aspect_to)
    throw std::invalid_argument("reshape: aspect span out of range");
  if (n_max < 1) throw std::invalid_argument("reshape: n_max must be >= 1");

  deptree::TreeView view(parse);
  AspectTree tree;
  tree.aspect_from = aspect_from;
  tree.aspect_to = aspect_to;
  tree.n_max = n_max;

  for (int j = 1; j <= n; ++j) {
    if (j >= aspect_from && j <= aspect_to) continue;
    AspectChild child;
    child.token = j;
    bool direct = false;
    for (int a = aspect_from; a <= aspect_to && !direct; ++a) {
      if (parse.heads[static_cast<size_t>(a - 1)] == j) {
        // j is the head of aspect word a
        child.relation = parse.rels[static_cast<size_t>(a - 1)];
        if (rev_suffix) child.relation += ":rev";
        child.direction = EdgeDir::from_root;
        direct = true;
      } else if (parse.heads[static_cast<size_t>(j - 1)] == a) {
        // aspect word a is the head of j
        child.relation = parse.rels[static_cast<size_t>(j - 1)];
        child.direction = EdgeDir::to_root;
        direct = true;
      }
    }
    if (!direct) {
      int m = n;
      for (int a = aspect_from; a <= aspect_to; ++a)
        m = std::min(m, deptree::tree_distance(view, a, j));
      child.relation = ncon_label(m, n_max);
      child.direction = EdgeDir::virt;
    }
    tree.children.push_back(std::move(child));
  }
  return tree;
}

OrdinaryGraph to_ordinary_graph(const DepParse& parse) {
  if (auto bad = deptree::validate_tree(parse))
    throw std::invalid_argument("to_ordinary_graph: invalid parse: " + *bad);
  OrdinaryGraph g;
  g.n = parse.size();
  for (int j = 1; j <= g.n; ++j) {
    int h = parse.heads[static_cast<size_t>(j - 1)];
    if (h == 0) continue;
    g.edges.push_back({h, j, parse.rels[static_cast<size_t>(j - 1)]});
  }
  return g;
}

RelationVocab RelationVocab::build(const std::vector<AspectTree>& trees, int n_max,
                                   const std::vector<std::string>& extra_labels) {
  std::vector<std::string> fixed;
  for (int m = 1; m <= n_max; ++m) fixed.push_back(ncon_label(m, n_max));
  fixed.push_back("inf:con");
  fixed.push_back(kSelf);

  std::set<std::string> reserved(fixed.begin(), fixed.end());
  std::set<std::string> real;
  for (const AspectTree& t : trees)
    for (const AspectChild& c : t.children)
      if (!reserved.count(c.relation)) real.insert(c.relation);
  for (const std::string& l : extra_labels)
    if (!reserved.count(l)) real.insert(l);

  RelationVocab v;
  v.labels_ = std::move(fixed);
  v.labels_.insert(v.labels_.end(), real.begin(), real.end());
  return v;
}

RelationVocab RelationVocab::from_labels(std::vector<std::string> labels) {
  RelationVocab v;
  v.labels_ = std::move(labels);
  return v;
}

int RelationVocab::index(const std::string& label) const {
  auto f = find(label);
  if (!f) throw std::out_of_range("unknown relation label '" + label + "'");
  return *f;
}

std::optional<int> RelationVocab::find(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

}  // namespace absa::reshape
