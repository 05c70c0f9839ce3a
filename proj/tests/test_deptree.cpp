#include <doctest.h>

#include <vector>

#include "absa/deptree.hpp"
#include "absa/rng.hpp"
#include "support/test_util.hpp"

using absa::DepParse;
using absa::Rng;
using testutil::random_tree;
namespace deptree = absa::deptree;

namespace {

DepParse make(std::vector<int> heads) {
  DepParse p;
  p.tokens.assign(heads.size(), "w");
  p.rels.assign(heads.size(), "dep");
  p.heads = std::move(heads);
  return p;
}

}  // namespace

TEST_CASE("validate_tree accepts well-formed trees") {
  CHECK(!deptree::validate_tree(make({0})));
  CHECK(!deptree::validate_tree(make({2, 0, 2, 3})));
}

TEST_CASE("validate_tree names the violation") {
  auto two_roots = deptree::validate_tree(make({0, 0, 1}));
  REQUIRE(two_roots);
  CHECK(two_roots->find("two roots") != std::string::npos);

  auto cycle = deptree::validate_tree(make({2, 3, 1}));
  REQUIRE(cycle);
  CHECK(cycle->find("roots") == std::string::npos);  // reported as no-root or cycle

  auto self = deptree::validate_tree(make({1}));
  REQUIRE(self);

  auto lengths = deptree::validate_tree([] {
    DepParse p = make({0, 1});
    p.rels.pop_back();
    return p;
  }());
  REQUIRE(lengths);
  CHECK(lengths->find("length mismatch") != std::string::npos);
}

TEST_CASE("chain distances") {
  DepParse chain = make({0, 1, 2, 3});  // 1 <- 2 <- 3 <- 4
  deptree::TreeView view(chain);
  CHECK(deptree::tree_distance(view, 1, 4) == 3);
  CHECK(deptree::tree_distance(view, 2, 3) == 1);
  for (int i = 1; i <= 4; ++i) CHECK(deptree::tree_distance(view, i, i) == 0);
}

TEST_CASE("distance bounds checking") {
  deptree::TreeView view(make({0, 1}));
  CHECK_THROWS_AS(deptree::tree_distance(view, 0, 1), std::out_of_range);
  CHECK_THROWS_AS(deptree::tree_distance(view, 1, 3), std::out_of_range);
}

TEST_CASE("tree_distance matches Floyd-Warshall on 200 random trees") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + rng.uniform_int(24);
    DepParse p = random_tree(n, rng);
    REQUIRE(!deptree::validate_tree(p));
    deptree::TreeView view(p);
    auto oracle = testutil::all_pairs_dist(p);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        CHECK(deptree::tree_distance(view, i, j) ==
              oracle[static_cast<size_t>(i)][static_cast<size_t>(j)]);
  }
}

TEST_CASE("distance symmetry and triangle equality on trees") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + rng.uniform_int(15);
    DepParse p = random_tree(n, rng);
    deptree::TreeView view(p);
    for (int probe = 0; probe < 20; ++probe) {
      int i = 1 + rng.uniform_int(n);
      int j = 1 + rng.uniform_int(n);
      int k = 1 + rng.uniform_int(n);
      int dij = deptree::tree_distance(view, i, j);
      CHECK(dij == deptree::tree_distance(view, j, i));
      CHECK(dij + deptree::tree_distance(view, j, k) >= deptree::tree_distance(view, i, k));
    }
  }
}
