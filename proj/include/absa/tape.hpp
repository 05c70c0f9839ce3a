#pragma once

#include <functional>
#include <vector>

#include "absa/tensor.hpp"

namespace absa::nn {

// Reverse-mode autodiff over a flat tape. Ops evaluate eagerly and record
// a backward closure; node creation order is a valid topological order, so
// backward() is a single reverse sweep. A tape is built per training step
// and discarded.
class Tape {
 public:
  using NodeId = int;

  // Leaf holding an external value. Parameters pass requires_grad = true.
  NodeId leaf(Tensor value, bool requires_grad = false);

  // y = W x, W:[m,k], x:[k] -> [m]
  NodeId matvec(NodeId w, NodeId x);
  // elementwise, same shape
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  // y = a .* mask, mask is a constant tensor (dropout)
  NodeId hadamard_const(NodeId a, Tensor mask);

  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);
  // log(max(x, floor)); zero gradient on the clamped branch
  NodeId log_clamped(NodeId a, double floor = 1e-12);

  // 1-D ops
  NodeId softmax(NodeId a);
  NodeId concat(const std::vector<NodeId>& parts);
  NodeId slice(NodeId a, int begin, int len);
  NodeId dot(NodeId a, NodeId b);
  NodeId pick(NodeId a, int index);                  // vector element -> scalar
  NodeId stack_scalars(const std::vector<NodeId>& s);  // n scalars -> [n]
  // sum_j w[j] * item_j, items are same-shape vectors
  NodeId weighted_sum(NodeId w, const std::vector<NodeId>& items);
  NodeId add_n(const std::vector<NodeId>& items);
  NodeId mean_of(const std::vector<NodeId>& items);
  NodeId sum(NodeId a);  // any shape -> scalar
  // row r of a 2-D node -> vector (embedding lookup)
  NodeId row(NodeId m, int r);

  // batched projections: n vectors stacked into a matrix, then one GEMM
  NodeId stack_rows(const std::vector<NodeId>& rows);  // n x [d] -> [n,d]
  NodeId matmul_nt(NodeId x, NodeId w);                // [n,d] x [m,d] -> [n,m] = X W^T
  NodeId add_rowwise(NodeId m, NodeId b);              // [n,d] + [d] per row

  const Tensor& val(NodeId id) const { return nodes_[static_cast<size_t>(id)].val; }
  // Gradient of the last backward() target w.r.t. node id (zeros if unreached).
  const Tensor& grad(NodeId id);

  // Reverse sweep from a scalar loss. Calling twice on one tape is an error.
  void backward(NodeId loss);

  int size() const { return static_cast<int>(nodes_.size()); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // empty until touched by backward
    bool requires_grad = false;
    std::function<void(Tape&, NodeId)> back;
  };

  NodeId push(Tensor val, bool requires_grad, std::function<void(Tape&, NodeId)> back);
  Tensor& grad_ref(NodeId id);
  bool has_grad(NodeId id) const {
    return !nodes_[static_cast<size_t>(id)].grad.data.empty();
  }
  bool rg(NodeId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace absa::nn
