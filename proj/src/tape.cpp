#include "absa/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace absa::nn {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EVec = Eigen::VectorXd;

Eigen::Map<const EMat> mat_view(const Tensor& t) {
  return Eigen::Map<const EMat>(t.data.data(), t.rows(), t.cols());
}
Eigen::Map<const EVec> vec_view(const Tensor& t) {
  return Eigen::Map<const EVec>(t.data.data(), t.numel());
}
Eigen::Map<EVec> vec_view(Tensor& t) {
  return Eigen::Map<EVec>(t.data.data(), t.numel());
}

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite())
    throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
}

}  // namespace

Tape::NodeId Tape::push(Tensor val, bool requires_grad,
                        std::function<void(Tape&, NodeId)> back) {
  Node n;
  n.val = std::move(val);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tensor& Tape::grad_ref(NodeId id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.val.shape);
  return n.grad;
}

const Tensor& Tape::grad(NodeId id) { return grad_ref(id); }

void Tape::backward(NodeId loss) {
  if (backward_done_)
    throw std::logic_error("backward() called twice on the same tape");
  if (val(loss).numel() != 1)
    throw std::invalid_argument("backward() requires a scalar loss, got shape " +
                                shape_str(val(loss)));
  backward_done_ = true;
  grad_ref(loss).data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || !n.back || n.grad.data.empty()) continue;
    n.back(*this, id);
  }
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
  check_finite(value, "leaf");
  return push(std::move(value), requires_grad, nullptr);
}

Tape::NodeId Tape::matvec(NodeId w, NodeId x) {
  const Tensor& W = val(w);
  const Tensor& X = val(x);
  if (W.rank() != 2 || X.rank() != 1 || W.cols() != X.numel())
    throw std::invalid_argument("matvec: shape mismatch " + shape_str(W) + " x " + shape_str(X));
  Tensor out = Tensor::zeros({W.rows()});
  vec_view(out) = mat_view(W) * vec_view(X);
  check_finite(out, "matvec");
  bool req = rg(w) || rg(x);
  return push(std::move(out), req, [w, x](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    if (t.rg(w)) {
      Tensor& gw = t.grad_ref(w);
      Eigen::Map<EMat>(gw.data.data(), gw.rows(), gw.cols()).noalias() +=
          vec_view(gy) * vec_view(t.val(x)).transpose();
    }
    if (t.rg(x)) {
      Tensor& gx = t.grad_ref(x);
      vec_view(gx).noalias() += mat_view(t.val(w)).transpose() * vec_view(gy);
    }
  });
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B))
    throw std::invalid_argument("add: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
  Tensor out = A;
  for (int i = 0; i < out.numel(); ++i) out.at(i) += B.at(i);
  check_finite(out, "add");
  return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    if (t.rg(a)) {
      Tensor& ga = t.grad_ref(a);
      for (int i = 0; i < ga.numel(); ++i) ga.at(i) += gy.at(i);
    }
    if (t.rg(b)) {
      Tensor& gb = t.grad_ref(b);
      for (int i = 0; i < gb.numel(); ++i) gb.at(i) += gy.at(i);
    }
  });
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B))
    throw std::invalid_argument("sub: shape mismatch");
  Tensor out = A;
  for (int i = 0; i < out.numel(); ++i) out.at(i) -= B.at(i);
  check_finite(out, "sub");
  return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    if (t.rg(a)) {
      Tensor& ga = t.grad_ref(a);
      for (int i = 0; i < ga.numel(); ++i) ga.at(i) += gy.at(i);
    }
    if (t.rg(b)) {
      Tensor& gb = t.grad_ref(b);
      for (int i = 0; i < gb.numel(); ++i) gb.at(i) -= gy.at(i);
    }
  });
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B))
    throw std::invalid_argument("mul: shape mismatch");
  Tensor out = A;
  for (int i = 0; i < out.numel(); ++i) out.at(i) *= B.at(i);
  check_finite(out, "mul");
  return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    if (t.rg(a)) {
      Tensor& ga = t.grad_ref(a);
      const Tensor& B2 = t.val(b);
      for (int i = 0; i < ga.numel(); ++i) ga.at(i) += gy.at(i) * B2.at(i);
    }
    if (t.rg(b)) {
      Tensor& gb = t.grad_ref(b);
      const Tensor& A2 = t.val(a);
      for (int i = 0; i < gb.numel(); ++i) gb.at(i) += gy.at(i) * A2.at(i);
    }
  });
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  Tensor out = val(a);
  for (double& v : out.data) v *= c;
  check_finite(out, "scale");
  return push(std::move(out), rg(a), [a, c](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i) ga.at(i) += c * gy.at(i);
  });
}

Tape::NodeId Tape::hadamard_const(NodeId a, Tensor mask) {
  const Tensor& A = val(a);
  if (!A.same_shape(mask))
    throw std::invalid_argument("hadamard_const: shape mismatch");
  Tensor out = A;
  for (int i = 0; i < out.numel(); ++i) out.at(i) *= mask.at(i);
  check_finite(out, "hadamard_const");
  auto m = std::make_shared<Tensor>(std::move(mask));
  return push(std::move(out), rg(a), [a, m](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i) ga.at(i) += gy.at(i) * m->at(i);
  });
}

Tape::NodeId Tape::relu(NodeId a) {
  Tensor out = val(a);
  for (double& v : out.data) v = v > 0 ? v : 0.0;
  return push(std::move(out), rg(a), [a](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    const Tensor& A = t.val(a);
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i)
      if (A.at(i) > 0) ga.at(i) += gy.at(i);
  });
}

Tape::NodeId Tape::tanh(NodeId a) {
  Tensor out = val(a);
  for (double& v : out.data) v = std::tanh(v);
  check_finite(out, "tanh");
  return push(std::move(out), rg(a), [a](Tape& t, NodeId y) {
    const Node& ny = t.nodes_[static_cast<size_t>(y)];
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i) {
      double v = ny.val.at(i);
      ga.at(i) += ny.grad.at(i) * (1.0 - v * v);
    }
  });
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  Tensor out = val(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  check_finite(out, "sigmoid");
  return push(std::move(out), rg(a), [a](Tape& t, NodeId y) {
    const Node& ny = t.nodes_[static_cast<size_t>(y)];
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i) {
      double v = ny.val.at(i);
      ga.at(i) += ny.grad.at(i) * v * (1.0 - v);
    }
  });
}

Tape::NodeId Tape::exp(NodeId a) {
  Tensor out = val(a);
  for (double& v : out.data) v = std::exp(v);
  check_finite(out, "exp");
  return push(std::move(out), rg(a), [a](Tape& t, NodeId y) {
    const Node& ny = t.nodes_[static_cast<size_t>(y)];
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i) ga.at(i) += ny.grad.at(i) * ny.val.at(i);
  });
}

Tape::NodeId Tape::log_clamped(NodeId a, double floor) {
  Tensor out = val(a);
  for (double& v : out.data) v = std::log(std::max(v, floor));
  check_finite(out, "log_clamped");
  return push(std::move(out), rg(a), [a, floor](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    const Tensor& A = t.val(a);
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i)
      if (A.at(i) > floor) ga.at(i) += gy.at(i) / A.at(i);
  });
}

Tape::NodeId Tape::softmax(NodeId a) {
  const Tensor& A = val(a);
  if (A.rank() != 1)
    throw std::invalid_argument("softmax: expects a vector");
  Tensor out = A;
  double mx = *std::max_element(out.data.begin(), out.data.end());
  double z = 0.0;
  for (double& v : out.data) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : out.data) v /= z;
  check_finite(out, "softmax");
  return push(std::move(out), rg(a), [a](Tape& t, NodeId y) {
    const Node& ny = t.nodes_[static_cast<size_t>(y)];
    Tensor& ga = t.grad_ref(a);
    double inner = 0.0;
    for (int i = 0; i < ny.val.numel(); ++i) inner += ny.grad.at(i) * ny.val.at(i);
    for (int i = 0; i < ga.numel(); ++i)
      ga.at(i) += ny.val.at(i) * (ny.grad.at(i) - inner);
  });
}

Tape::NodeId Tape::concat(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty input");
  int n = 0;
  bool req = false;
  for (NodeId p : parts) {
    if (val(p).rank() != 1) throw std::invalid_argument("concat: expects vectors");
    n += val(p).numel();
    req = req || rg(p);
  }
  Tensor out = Tensor::zeros({n});
  int off = 0;
  for (NodeId p : parts) {
    const Tensor& P = val(p);
    std::copy(P.data.begin(), P.data.end(), out.data.begin() + off);
    off += P.numel();
  }
  return push(std::move(out), req, [parts](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    int off2 = 0;
    for (NodeId p : parts) {
      int len = t.val(p).numel();
      if (t.rg(p)) {
        Tensor& gp = t.grad_ref(p);
        for (int i = 0; i < len; ++i) gp.at(i) += gy.at(off2 + i);
      }
      off2 += len;
    }
  });
}

Tape::NodeId Tape::slice(NodeId a, int begin, int len) {
  const Tensor& A = val(a);
  if (A.rank() != 1 || begin < 0 || begin + len > A.numel())
    throw std::invalid_argument("slice: out of range");
  Tensor out = Tensor::zeros({len});
  std::copy(A.data.begin() + begin, A.data.begin() + begin + len, out.data.begin());
  return push(std::move(out), rg(a), [a, begin, len](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < len; ++i) ga.at(begin + i) += gy.at(i);
  });
}

Tape::NodeId Tape::dot(NodeId a, NodeId b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rank() != 1 || !A.same_shape(B))
    throw std::invalid_argument("dot: shape mismatch");
  double s = 0.0;
  for (int i = 0; i < A.numel(); ++i) s += A.at(i) * B.at(i);
  Tensor out = Tensor::scalar(s);
  check_finite(out, "dot");
  return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, NodeId y) {
    double gy = t.nodes_[static_cast<size_t>(y)].grad.at(0);
    if (t.rg(a)) {
      Tensor& ga = t.grad_ref(a);
      const Tensor& B2 = t.val(b);
      for (int i = 0; i < ga.numel(); ++i) ga.at(i) += gy * B2.at(i);
    }
    if (t.rg(b)) {
      Tensor& gb = t.grad_ref(b);
      const Tensor& A2 = t.val(a);
      for (int i = 0; i < gb.numel(); ++i) gb.at(i) += gy * A2.at(i);
    }
  });
}

Tape::NodeId Tape::pick(NodeId a, int index) {
  const Tensor& A = val(a);
  if (A.rank() != 1 || index < 0 || index >= A.numel())
    throw std::invalid_argument("pick: index out of range");
  Tensor out = Tensor::scalar(A.at(index));
  return push(std::move(out), rg(a), [a, index](Tape& t, NodeId y) {
    t.grad_ref(a).at(index) += t.nodes_[static_cast<size_t>(y)].grad.at(0);
  });
}

Tape::NodeId Tape::stack_scalars(const std::vector<NodeId>& s) {
  if (s.empty()) throw std::invalid_argument("stack_scalars: empty input");
  Tensor out = Tensor::zeros({static_cast<int>(s.size())});
  bool req = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (val(s[i]).numel() != 1)
      throw std::invalid_argument("stack_scalars: expects scalars");
    out.at(static_cast<int>(i)) = val(s[i]).at(0);
    req = req || rg(s[i]);
  }
  return push(std::move(out), req, [s](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    for (size_t i = 0; i < s.size(); ++i)
      if (t.rg(s[i])) t.grad_ref(s[i]).at(0) += gy.at(static_cast<int>(i));
  });
}

Tape::NodeId Tape::weighted_sum(NodeId w, const std::vector<NodeId>& items) {
  const Tensor& W = val(w);
  if (W.rank() != 1 || static_cast<size_t>(W.numel()) != items.size())
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  if (items.empty()) throw std::invalid_argument("weighted_sum: empty input");
  Tensor out = Tensor::zeros(val(items[0]).shape);
  bool req = rg(w);
  for (size_t j = 0; j < items.size(); ++j) {
    const Tensor& I = val(items[j]);
    if (!I.same_shape(out)) throw std::invalid_argument("weighted_sum: item shape mismatch");
    double wj = W.at(static_cast<int>(j));
    for (int i = 0; i < out.numel(); ++i) out.at(i) += wj * I.at(i);
    req = req || rg(items[j]);
  }
  check_finite(out, "weighted_sum");
  return push(std::move(out), req, [w, items](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    const Tensor& W2 = t.val(w);
    for (size_t j = 0; j < items.size(); ++j) {
      if (t.rg(w)) {
        double s = 0.0;
        const Tensor& I = t.val(items[j]);
        for (int i = 0; i < gy.numel(); ++i) s += gy.at(i) * I.at(i);
        t.grad_ref(w).at(static_cast<int>(j)) += s;
      }
      if (t.rg(items[j])) {
        Tensor& gi = t.grad_ref(items[j]);
        double wj = W2.at(static_cast<int>(j));
        for (int i = 0; i < gi.numel(); ++i) gi.at(i) += wj * gy.at(i);
      }
    }
  });
}

Tape::NodeId Tape::add_n(const std::vector<NodeId>& items) {
  if (items.empty()) throw std::invalid_argument("add_n: empty input");
  Tensor out = val(items[0]);
  bool req = rg(items[0]);
  for (size_t j = 1; j < items.size(); ++j) {
    const Tensor& I = val(items[j]);
    if (!I.same_shape(out)) throw std::invalid_argument("add_n: shape mismatch");
    for (int i = 0; i < out.numel(); ++i) out.at(i) += I.at(i);
    req = req || rg(items[j]);
  }
  check_finite(out, "add_n");
  return push(std::move(out), req, [items](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    for (NodeId it : items) {
      if (!t.rg(it)) continue;
      Tensor& gi = t.grad_ref(it);
      for (int i = 0; i < gi.numel(); ++i) gi.at(i) += gy.at(i);
    }
  });
}

Tape::NodeId Tape::mean_of(const std::vector<NodeId>& items) {
  return scale(add_n(items), 1.0 / static_cast<double>(items.size()));
}

Tape::NodeId Tape::sum(NodeId a) {
  const Tensor& A = val(a);
  double s = 0.0;
  for (double v : A.data) s += v;
  Tensor out = Tensor::scalar(s);
  check_finite(out, "sum");
  return push(std::move(out), rg(a), [a](Tape& t, NodeId y) {
    double gy = t.nodes_[static_cast<size_t>(y)].grad.at(0);
    Tensor& ga = t.grad_ref(a);
    for (int i = 0; i < ga.numel(); ++i) ga.at(i) += gy;
  });
}

Tape::NodeId Tape::stack_rows(const std::vector<NodeId>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
  int d = val(rows[0]).numel();
  int n = static_cast<int>(rows.size());
  Tensor out = Tensor::zeros({n, d});
  bool req = false;
  for (int r = 0; r < n; ++r) {
    const Tensor& R = val(rows[static_cast<size_t>(r)]);
    if (R.rank() != 1 || R.numel() != d)
      throw std::invalid_argument("stack_rows: row shape mismatch");
    std::copy(R.data.begin(), R.data.end(),
              out.data.begin() + static_cast<size_t>(r) * d);
    req = req || rg(rows[static_cast<size_t>(r)]);
  }
  return push(std::move(out), req, [rows, d](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    for (size_t r = 0; r < rows.size(); ++r) {
      if (!t.rg(rows[r])) continue;
      Tensor& gr = t.grad_ref(rows[r]);
      for (int c = 0; c < d; ++c) gr.at(c) += gy.at(static_cast<int>(r), c);
    }
  });
}

Tape::NodeId Tape::matmul_nt(NodeId x, NodeId w) {
  const Tensor& X = val(x);
  const Tensor& W = val(w);
  if (X.rank() != 2 || W.rank() != 2 || X.cols() != W.cols())
    throw std::invalid_argument("matmul_nt: shape mismatch " + shape_str(X) + " x " +
                                shape_str(W) + "^T");
  Tensor out = Tensor::zeros({X.rows(), W.rows()});
  Eigen::Map<EMat>(out.data.data(), out.rows(), out.cols()).noalias() =
      mat_view(X) * mat_view(W).transpose();
  check_finite(out, "matmul_nt");
  return push(std::move(out), rg(x) || rg(w), [x, w](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    auto gy_view = Eigen::Map<const EMat>(gy.data.data(), gy.rows(), gy.cols());
    if (t.rg(x)) {
      Tensor& gx = t.grad_ref(x);
      Eigen::Map<EMat>(gx.data.data(), gx.rows(), gx.cols()).noalias() +=
          gy_view * mat_view(t.val(w));
    }
    if (t.rg(w)) {
      Tensor& gw = t.grad_ref(w);
      Eigen::Map<EMat>(gw.data.data(), gw.rows(), gw.cols()).noalias() +=
          gy_view.transpose() * mat_view(t.val(x));
    }
  });
}

Tape::NodeId Tape::add_rowwise(NodeId m, NodeId b) {
  const Tensor& M = val(m);
  const Tensor& B = val(b);
  if (M.rank() != 2 || B.rank() != 1 || M.cols() != B.numel())
    throw std::invalid_argument("add_rowwise: shape mismatch");
  Tensor out = M;
  for (int r = 0; r < M.rows(); ++r)
    for (int c = 0; c < M.cols(); ++c) out.at(r, c) += B.at(c);
  check_finite(out, "add_rowwise");
  return push(std::move(out), rg(m) || rg(b), [m, b](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    if (t.rg(m)) {
      Tensor& gm = t.grad_ref(m);
      for (int i = 0; i < gm.numel(); ++i) gm.at(i) += gy.at(i);
    }
    if (t.rg(b)) {
      Tensor& gb = t.grad_ref(b);
      for (int r = 0; r < gy.rows(); ++r)
        for (int c = 0; c < gy.cols(); ++c) gb.at(c) += gy.at(r, c);
    }
  });
}

Tape::NodeId Tape::row(NodeId m, int r) {
  const Tensor& M = val(m);
  if (M.rank() != 2 || r < 0 || r >= M.rows())
    throw std::invalid_argument("row: index out of range");
  int c = M.cols();
  Tensor out = Tensor::zeros({c});
  std::copy(M.data.begin() + static_cast<size_t>(r) * c,
            M.data.begin() + static_cast<size_t>(r + 1) * c, out.data.begin());
  return push(std::move(out), rg(m), [m, r](Tape& t, NodeId y) {
    const Tensor& gy = t.nodes_[static_cast<size_t>(y)].grad;
    Tensor& gm = t.grad_ref(m);
    int c2 = gm.cols();
    for (int i = 0; i < c2; ++i) gm.at(r, i) += gy.at(i);
  });
}

}  // namespace absa::nn
