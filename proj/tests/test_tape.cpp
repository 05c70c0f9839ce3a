#include <doctest.h>

#include <cmath>
#include <functional>

#include "absa/rng.hpp"
#include "absa/tape.hpp"

using absa::Rng;
using absa::nn::Tape;
using absa::nn::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Central-difference check of d(scalar expr)/d(leaf) for an arbitrary
// expression builder. Rebuilds the tape per evaluation.
double fd_check(const std::vector<Tensor>& leaves,
                const std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>& build) {
  auto eval = [&](const std::vector<Tensor>& vals) {
    Tape tape;
    std::vector<Tape::NodeId> ids;
    for (const Tensor& v : vals) ids.push_back(tape.leaf(v, true));
    return tape.val(build(tape, ids)).at(0);
  };

  Tape tape;
  std::vector<Tape::NodeId> ids;
  for (const Tensor& v : leaves) ids.push_back(tape.leaf(v, true));
  Tape::NodeId out = build(tape, ids);
  tape.backward(out);

  double worst = 0.0;
  const double eps = 1e-6;
  for (size_t l = 0; l < leaves.size(); ++l) {
    for (int i = 0; i < leaves[l].numel(); ++i) {
      std::vector<Tensor> plus = leaves, minus = leaves;
      plus[l].at(i) += eps;
      minus[l].at(i) -= eps;
      double g_num = (eval(plus) - eval(minus)) / (2 * eps);
      double g_ana = tape.grad(ids[l]).at(i);
      double rel = std::fabs(g_ana - g_num) /
                   std::max(1e-8, std::fabs(g_ana) + std::fabs(g_num));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("matvec forward and gradient") {
  Rng rng(7);
  Tensor w = random_tensor({3, 4}, rng);
  Tensor x = random_tensor({4}, rng);
  double err = fd_check({w, x}, [](Tape& t, const std::vector<Tape::NodeId>& ids) {
    return t.sum(t.matvec(ids[0], ids[1]));
  });
  CHECK(err < 1e-7);
}

TEST_CASE("elementwise chain gradient") {
  Rng rng(11);
  Tensor a = random_tensor({5}, rng);
  Tensor b = random_tensor({5}, rng);
  double err = fd_check({a, b}, [](Tape& t, const std::vector<Tape::NodeId>& ids) {
    return t.sum(t.mul(t.tanh(ids[0]), t.sigmoid(t.sub(ids[0], ids[1]))));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("softmax gradient and normalization") {
  Rng rng(13);
  Tensor a = random_tensor({6}, rng, -2, 2);
  Tensor w = random_tensor({6}, rng);
  double err = fd_check({a, w}, [](Tape& t, const std::vector<Tape::NodeId>& ids) {
    return t.dot(t.softmax(ids[0]), ids[1]);
  });
  CHECK(err < 1e-6);

  Tape tape;
  Tape::NodeId p = tape.softmax(tape.leaf(a));
  double sum = 0;
  for (double v : tape.val(p).data) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("slice/concat/pick/stack round trips gradients") {
  Rng rng(17);
  Tensor a = random_tensor({6}, rng);
  double err = fd_check({a}, [](Tape& t, const std::vector<Tape::NodeId>& ids) {
    Tape::NodeId left = t.slice(ids[0], 0, 3);
    Tape::NodeId right = t.slice(ids[0], 3, 3);
    Tape::NodeId joined = t.concat({t.relu(left), t.tanh(right)});
    Tape::NodeId s1 = t.pick(joined, 1);
    Tape::NodeId s2 = t.pick(joined, 4);
    return t.sum(t.softmax(t.stack_scalars({s1, s2, t.dot(left, right)})));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("weighted_sum gradient") {
  Rng rng(19);
  Tensor w = random_tensor({3}, rng, 0.1, 1.0);
  Tensor a = random_tensor({4}, rng);
  Tensor b = random_tensor({4}, rng);
  Tensor c = random_tensor({4}, rng);
  Tensor probe = random_tensor({4}, rng);
  double err = fd_check({w, a, b, c, probe}, [](Tape& t, const std::vector<Tape::NodeId>& ids) {
    return t.dot(t.weighted_sum(ids[0], {ids[1], ids[2], ids[3]}), ids[4]);
  });
  CHECK(err < 1e-6);
}

TEST_CASE("row lookup gradient accumulates into the matrix") {
  Rng rng(23);
  Tensor m = random_tensor({4, 3}, rng);
  double err = fd_check({m}, [](Tape& t, const std::vector<Tape::NodeId>& ids) {
    // same row twice: gradient must accumulate
    return t.sum(t.add(t.row(ids[0], 2), t.row(ids[0], 2)));
  });
  CHECK(err < 1e-8);

  Tape tape;
  Tape::NodeId leaf = tape.leaf(m, true);
  Tape::NodeId out = tape.sum(tape.add(tape.row(leaf, 1), tape.row(leaf, 1)));
  tape.backward(out);
  CHECK(tape.grad(leaf).at(1, 0) == doctest::Approx(2.0));
  CHECK(tape.grad(leaf).at(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("log_clamped floors the argument and zeroes the clamped gradient") {
  Tape tape;
  Tape::NodeId x = tape.leaf(Tensor::vec({0.5, 0.0}), true);
  Tape::NodeId y = tape.sum(tape.log_clamped(x, 1e-12));
  CHECK(tape.val(y).at(0) == doctest::Approx(std::log(0.5) + std::log(1e-12)));
  tape.backward(y);
  CHECK(tape.grad(x).at(0) == doctest::Approx(2.0));
  CHECK(tape.grad(x).at(1) == 0.0);
}

TEST_CASE("backward demands a scalar and refuses to run twice") {
  Tape tape;
  Tape::NodeId v = tape.leaf(Tensor::vec({1.0, 2.0}), true);
  CHECK_THROWS_AS(tape.backward(v), std::invalid_argument);

  Tape tape2;
  Tape::NodeId w = tape2.leaf(Tensor::vec({1.0, 2.0}), true);
  Tape::NodeId s = tape2.sum(w);
  tape2.backward(s);
  CHECK_THROWS_AS(tape2.backward(s), std::logic_error);
}

TEST_CASE("loss = sum(W) gives all-ones gradient") {
  Tape tape;
  Tensor w = Tensor::zeros({3, 2});
  Tape::NodeId leaf = tape.leaf(w, true);
  tape.backward(tape.sum(leaf));
  for (double g : tape.grad(leaf).data) CHECK(g == 1.0);
}

TEST_CASE("unreached parameters get zero gradients") {
  Tape tape;
  Tape::NodeId used = tape.leaf(Tensor::vec({1.0, 2.0}), true);
  Tape::NodeId unused = tape.leaf(Tensor::vec({3.0}), true);
  tape.backward(tape.sum(used));
  CHECK(tape.grad(unused).at(0) == 0.0);
}

TEST_CASE("non-finite op results are rejected") {
  Tape tape;
  Tape::NodeId x = tape.leaf(Tensor::vec({710.0}));  // exp overflows double
  CHECK_THROWS_AS(tape.exp(x), std::runtime_error);
}
