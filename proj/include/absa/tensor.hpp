#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace absa::nn {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
// model needs; rank 0 is represented as shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    assert(static_cast<size_t>(numel()) == data.size());
  }

  static Tensor zeros(std::vector<int> s) {
    int n = 1;
    for (int d : s) n *= d;
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
  }
  static Tensor full(std::vector<int> s, double v) {
    int n = 1;
    for (int d : s) n *= d;
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor vec(std::vector<double> d) {
    int n = static_cast<int>(d.size());
    return Tensor({n}, std::move(d));
  }

  int numel() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const {
    assert(rank() == 2);
    return shape[1];
  }

  double& at(int i) { return data[static_cast<size_t>(i)]; }
  double at(int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

}  // namespace absa::nn
