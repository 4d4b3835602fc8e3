#pragma once

#include <cstdint>
#include <vector>

#include "piekd/tensor.hpp"

namespace piekd {

using NodeId = std::int32_t;

// Reverse-mode tape over rank-2 tensors. Forward values are computed eagerly
// as nodes are appended (inputs always precede their consumers); backward
// fills the adjoint of every node on a differentiation path by a single
// reverse sweep from a scalar root. Leaves enter either as param (tracked,
// adjoint available after backward) or constant (non-differentiable data;
// no adjoint is computed for nodes reachable only through constants).
// Elementwise binaries accept a [1,n] right operand broadcast over rows.
class Graph {
public:
  enum class Op : std::uint8_t {
    Constant,   // non-differentiable leaf
    Param,      // tracked leaf
    MatMul,     // [m,k] x [k,n]
    Add,        // same shape, or rhs [1,n]
    Sub,        // same shape
    Mul,        // same shape, or rhs [1,n]
    Scale,      // x * c0
    Shift,      // x + c0
    Relu,
    Tanh,
    Exp,
    Log,
    Square,
    Clamp,      // clamp(x, c0, c1); pass-through gradient inside the range
    Minimum,    // elementwise min(a, b); gradient follows the smaller input
    SliceCols,  // columns [c0, c1)
    ConcatCols,
    RowSum,     // [m,n] -> [m,1]
    Sum,        // -> [1,1]
    Mean,       // -> [1,1]
    TanhLogJacobian,  // log(1 - tanh(x)^2), numerically stable
  };

  NodeId constant(Tensor value);
  NodeId param(Tensor value);
  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId shift(NodeId a, double c);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId square(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId minimum(NodeId a, NodeId b);
  NodeId slice_cols(NodeId a, std::int64_t begin, std::int64_t end);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId row_sum(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId tanh_log_jacobian(NodeId a);

  // Root must be scalar ([1,1]). Populates adjoints for every node on the
  // tape up to and including root.
  void backward(NodeId root);

  const Tensor& value(NodeId id) const { return nodes_[check_id(id)].value; }
  const Tensor& adjoint(NodeId id) const;
  double scalar_value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  void reserve(std::size_t n) { nodes_.reserve(n); }

private:
  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    double c0 = 0.0;
    double c1 = 0.0;
    Tensor value;
    Tensor adjoint;
    bool needs_grad = false;
  };

  NodeId push(Node n, const char* opname);
  bool needs(NodeId id) const {
    return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad;
  }
  std::size_t check_id(NodeId id) const;
  void backprop_node(NodeId id);

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace piekd
