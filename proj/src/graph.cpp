#include "piekd/graph.hpp"

#include <algorithm>
#include <cmath>

#include "piekd/kernels.hpp"

namespace piekd {

namespace {

// log(1 + e^x) without overflow
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

constexpr double kLog2 = 0.6931471805599453094172321;

}  // namespace

std::size_t Graph::check_id(NodeId id) const {
  check(id >= 0 && static_cast<std::size_t>(id) < nodes_.size(),
        "graph: invalid node id ", id);
  return static_cast<std::size_t>(id);
}

NodeId Graph::push(Node n, const char* opname) {
  n.value.assert_finite(opname);
  if (n.op == Op::Param)
    n.needs_grad = true;
  else if (n.op != Op::Constant)
    n.needs_grad = needs(n.a) || needs(n.b);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(Tensor value) {
  return push({Op::Constant, -1, -1, 0, 0, std::move(value), {}}, "constant");
}

NodeId Graph::param(Tensor value) {
  return push({Op::Param, -1, -1, 0, 0, std::move(value), {}}, "param");
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.cols() == B.rows(), "matmul: shape mismatch ", A.shape_str(), " x ",
        B.shape_str());
  Tensor out({A.rows(), B.cols()});
  kern::matmul_nn(A.data(), B.data(), out.data(), A.rows(), A.cols(),
                  B.cols());
  return push({Op::MatMul, a, b, 0, 0, std::move(out), {}}, "matmul");
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  Tensor out({A.rows(), A.cols()});
  const double* pa = A.data();
  const double* pb = B.data();
  double* po = out.data();
  if (A.same_shape(B)) {
    for (std::int64_t i = 0; i < A.size(); ++i) po[i] = pa[i] + pb[i];
  } else if (B.rows() == 1 && B.cols() == A.cols()) {
    const std::int64_t n = A.cols();
    for (std::int64_t r = 0; r < A.rows(); ++r)
      for (std::int64_t c = 0; c < n; ++c)
        po[r * n + c] = pa[r * n + c] + pb[c];
  } else {
    fail("add: shape mismatch ", A.shape_str(), " vs ", B.shape_str());
  }
  return push({Op::Add, a, b, 0, 0, std::move(out), {}}, "add");
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.same_shape(B), "sub: shape mismatch ", A.shape_str(), " vs ",
        B.shape_str());
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = A.at(i) - B.at(i);
  return push({Op::Sub, a, b, 0, 0, std::move(out), {}}, "sub");
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  Tensor out({A.rows(), A.cols()});
  const double* pa = A.data();
  const double* pb = B.data();
  double* po = out.data();
  if (A.same_shape(B)) {
    for (std::int64_t i = 0; i < A.size(); ++i) po[i] = pa[i] * pb[i];
  } else if (B.rows() == 1 && B.cols() == A.cols()) {
    const std::int64_t n = A.cols();
    for (std::int64_t r = 0; r < A.rows(); ++r)
      for (std::int64_t c = 0; c < n; ++c)
        po[r * n + c] = pa[r * n + c] * pb[c];
  } else {
    fail("mul: shape mismatch ", A.shape_str(), " vs ", B.shape_str());
  }
  return push({Op::Mul, a, b, 0, 0, std::move(out), {}}, "mul");
}

NodeId Graph::scale(NodeId a, double c) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = A.at(i) * c;
  return push({Op::Scale, a, -1, c, 0, std::move(out), {}}, "scale");
}

NodeId Graph::shift(NodeId a, double c) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = A.at(i) + c;
  return push({Op::Shift, a, -1, c, 0, std::move(out), {}}, "shift");
}

NodeId Graph::relu(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  const double* pa = A.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < A.size(); ++i) po[i] = std::max(pa[i], 0.0);
  return push({Op::Relu, a, -1, 0, 0, std::move(out), {}}, "relu");
}

NodeId Graph::tanh(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = std::tanh(A.at(i));
  return push({Op::Tanh, a, -1, 0, 0, std::move(out), {}}, "tanh");
}

NodeId Graph::exp(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = std::exp(A.at(i));
  return push({Op::Exp, a, -1, 0, 0, std::move(out), {}}, "exp");
}

NodeId Graph::log(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = std::log(A.at(i));
  return push({Op::Log, a, -1, 0, 0, std::move(out), {}}, "log");
}

NodeId Graph::square(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) out.at(i) = A.at(i) * A.at(i);
  return push({Op::Square, a, -1, 0, 0, std::move(out), {}}, "square");
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
  check(lo <= hi, "clamp: lo ", lo, " > hi ", hi);
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) {
    double v = A.at(i);
    out.at(i) = v < lo ? lo : (v > hi ? hi : v);
  }
  return push({Op::Clamp, a, -1, lo, hi, std::move(out), {}}, "clamp");
}

NodeId Graph::minimum(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.same_shape(B), "minimum: shape mismatch ", A.shape_str(), " vs ",
        B.shape_str());
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i)
    out.at(i) = A.at(i) <= B.at(i) ? A.at(i) : B.at(i);
  return push({Op::Minimum, a, b, 0, 0, std::move(out), {}}, "minimum");
}

NodeId Graph::slice_cols(NodeId a, std::int64_t begin, std::int64_t end) {
  const Tensor& A = value(a);
  check(0 <= begin && begin < end && end <= A.cols(), "slice_cols: range [",
        begin, ",", end, ") out of bounds for ", A.shape_str());
  Tensor out({A.rows(), end - begin});
  for (std::int64_t r = 0; r < A.rows(); ++r)
    for (std::int64_t c = begin; c < end; ++c) out(r, c - begin) = A(r, c);
  return push({Op::SliceCols, a, -1, static_cast<double>(begin),
               static_cast<double>(end), std::move(out), {}},
              "slice_cols");
}

NodeId Graph::concat_cols(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.rows() == B.rows(), "concat_cols: row mismatch ", A.shape_str(),
        " vs ", B.shape_str());
  Tensor out({A.rows(), A.cols() + B.cols()});
  for (std::int64_t r = 0; r < A.rows(); ++r) {
    for (std::int64_t c = 0; c < A.cols(); ++c) out(r, c) = A(r, c);
    for (std::int64_t c = 0; c < B.cols(); ++c) out(r, A.cols() + c) = B(r, c);
  }
  return push({Op::ConcatCols, a, b, 0, 0, std::move(out), {}}, "concat_cols");
}

NodeId Graph::row_sum(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), 1});
  for (std::int64_t r = 0; r < A.rows(); ++r) {
    double s = 0.0;
    for (std::int64_t c = 0; c < A.cols(); ++c) s += A(r, c);
    out(r, 0) = s;
  }
  return push({Op::RowSum, a, -1, 0, 0, std::move(out), {}}, "row_sum");
}

NodeId Graph::sum(NodeId a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (std::int64_t i = 0; i < A.size(); ++i) s += A.at(i);
  return push({Op::Sum, a, -1, 0, 0, Tensor::scalar(s), {}}, "sum");
}

NodeId Graph::mean(NodeId a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (std::int64_t i = 0; i < A.size(); ++i) s += A.at(i);
  return push({Op::Mean, a, -1, 0, 0,
               Tensor::scalar(s / static_cast<double>(A.size())), {}},
              "mean");
}

NodeId Graph::tanh_log_jacobian(NodeId a) {
  const Tensor& A = value(a);
  Tensor out({A.rows(), A.cols()});
  for (std::int64_t i = 0; i < A.size(); ++i) {
    const double x = A.at(i);
    out.at(i) = 2.0 * (kLog2 - x - softplus(-2.0 * x));
  }
  return push({Op::TanhLogJacobian, a, -1, 0, 0, std::move(out), {}},
              "tanh_log_jacobian");
}

const Tensor& Graph::adjoint(NodeId id) const {
  check(ran_backward_, "graph: adjoint requested before backward");
  const Node& n = nodes_[check_id(id)];
  check(n.needs_grad, "graph: node ", id,
        " is constant-derived and carries no adjoint");
  check(!n.adjoint.empty(), "graph: node ", id, " not reached by backward");
  return n.adjoint;
}

double Graph::scalar_value(NodeId id) const {
  const Tensor& v = value(id);
  check(v.size() == 1, "graph: node ", id, " is not scalar: ", v.shape_str());
  return v(0, 0);
}

void Graph::backward(NodeId root) {
  const std::size_t r = check_id(root);
  check(nodes_[r].value.size() == 1, "backward: root must be scalar, got ",
        nodes_[r].value.shape_str());
  check(nodes_[r].needs_grad,
        "backward: root depends on no tracked parameters");
  for (std::size_t i = 0; i <= r; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad) n.adjoint = Tensor({n.value.rows(), n.value.cols()});
  }
  nodes_[r].adjoint.fill(1.0);
  ran_backward_ = true;
  for (std::size_t i = r + 1; i-- > 0;) {
    backprop_node(static_cast<NodeId>(i));
  }
}

void Graph::backprop_node(NodeId id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad || n.op == Op::Param) return;
  const bool na = needs(n.a);
  const bool nb = needs(n.b);
  const Tensor& g = n.adjoint;
  Tensor& av = nodes_[static_cast<std::size_t>(n.a)].value;
  Tensor& ag = nodes_[static_cast<std::size_t>(n.a)].adjoint;
  const std::int64_t size = g.size();
  const double* pg = g.data();
  const double* pa = av.data();
  double* pag = ag.data();

  switch (n.op) {
    case Op::MatMul: {
      Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
      Tensor& bg = nodes_[static_cast<std::size_t>(n.b)].adjoint;
      // dA += dC * B^T ; dB += A^T * dC
      if (na)
        kern::matmul_nt_acc(g.data(), bv.data(), ag.data(), g.rows(),
                            g.cols(), bv.rows());
      if (nb)
        kern::matmul_tn_acc(av.data(), g.data(), bg.data(), av.rows(),
                            av.cols(), g.cols());
      break;
    }
    case Op::Add: {
      if (na)
        for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i];
      if (nb) {
        Tensor& bg = nodes_[static_cast<std::size_t>(n.b)].adjoint;
        if (bg.same_shape(g)) {
          double* pbg = bg.data();
          for (std::int64_t i = 0; i < size; ++i) pbg[i] += pg[i];
        } else {
          kern::colsum_acc(g.data(), bg.data(), g.rows(), g.cols());
        }
      }
      break;
    }
    case Op::Sub: {
      if (na)
        for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i];
      if (nb) {
        double* pbg = nodes_[static_cast<std::size_t>(n.b)].adjoint.data();
        for (std::int64_t i = 0; i < size; ++i) pbg[i] -= pg[i];
      }
      break;
    }
    case Op::Mul: {
      Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
      const double* pbv = bv.data();
      if (bv.same_shape(av)) {
        if (na)
          for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i] * pbv[i];
        if (nb) {
          double* pbg = nodes_[static_cast<std::size_t>(n.b)].adjoint.data();
          for (std::int64_t i = 0; i < size; ++i) pbg[i] += pg[i] * pa[i];
        }
      } else {
        const std::int64_t cols = g.cols();
        if (na) {
          for (std::int64_t r = 0; r < g.rows(); ++r) {
            const double* gr = pg + r * cols;
            double* agr = pag + r * cols;
            for (std::int64_t c = 0; c < cols; ++c) agr[c] += gr[c] * pbv[c];
          }
        }
        if (nb) {
          double* pbg = nodes_[static_cast<std::size_t>(n.b)].adjoint.data();
          for (std::int64_t r = 0; r < g.rows(); ++r) {
            const double* gr = pg + r * cols;
            const double* ar = pa + r * cols;
            for (std::int64_t c = 0; c < cols; ++c) pbg[c] += gr[c] * ar[c];
          }
        }
      }
      break;
    }
    case Op::Scale: {
      const double k = n.c0;
      for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i] * k;
      break;
    }
    case Op::Shift:
      for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i];
      break;
    case Op::Relu:
      for (std::int64_t i = 0; i < size; ++i)
        pag[i] += pa[i] > 0.0 ? pg[i] : 0.0;
      break;
    case Op::Tanh: {
      const double* py = n.value.data();
      for (std::int64_t i = 0; i < size; ++i)
        pag[i] += pg[i] * (1.0 - py[i] * py[i]);
      break;
    }
    case Op::Exp: {
      const double* py = n.value.data();
      for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i] * py[i];
      break;
    }
    case Op::Log:
      for (std::int64_t i = 0; i < size; ++i) pag[i] += pg[i] / pa[i];
      break;
    case Op::Square:
      for (std::int64_t i = 0; i < size; ++i)
        pag[i] += pg[i] * 2.0 * pa[i];
      break;
    case Op::Clamp: {
      const double lo = n.c0, hi = n.c1;
      for (std::int64_t i = 0; i < size; ++i)
        pag[i] += (pa[i] >= lo && pa[i] <= hi) ? pg[i] : 0.0;
      break;
    }
    case Op::Minimum: {
      const double* pbv = nodes_[static_cast<std::size_t>(n.b)].value.data();
      Tensor& bgt = nodes_[static_cast<std::size_t>(n.b)].adjoint;
      double* pbg = bgt.empty() ? nullptr : bgt.data();
      for (std::int64_t i = 0; i < size; ++i) {
        if (pa[i] <= pbv[i]) {
          if (na) pag[i] += pg[i];
        } else if (nb) {
          pbg[i] += pg[i];
        }
      }
      break;
    }
    case Op::SliceCols: {
      const auto begin = static_cast<std::int64_t>(n.c0);
      const std::int64_t gc = g.cols();
      const std::int64_t ac = ag.cols();
      for (std::int64_t r = 0; r < g.rows(); ++r)
        for (std::int64_t c = 0; c < gc; ++c)
          pag[r * ac + begin + c] += pg[r * gc + c];
      break;
    }
    case Op::ConcatCols: {
      const std::int64_t ac = nodes_[static_cast<std::size_t>(n.a)]
                                  .value.cols();
      const std::int64_t gc = g.cols();
      if (na) {
        for (std::int64_t r = 0; r < g.rows(); ++r) {
          const double* gr = pg + r * gc;
          for (std::int64_t c = 0; c < ac; ++c) pag[r * ac + c] += gr[c];
        }
      }
      if (nb) {
        Tensor& bg = nodes_[static_cast<std::size_t>(n.b)].adjoint;
        double* pbg = bg.data();
        const std::int64_t bc = bg.cols();
        for (std::int64_t r = 0; r < g.rows(); ++r) {
          const double* gr = pg + r * gc;
          for (std::int64_t c = 0; c < bc; ++c) pbg[r * bc + c] += gr[ac + c];
        }
      }
      break;
    }
    case Op::RowSum: {
      const std::int64_t ac = ag.cols();
      for (std::int64_t r = 0; r < ag.rows(); ++r) {
        const double gv = pg[r];
        double* agr = pag + r * ac;
        for (std::int64_t c = 0; c < ac; ++c) agr[c] += gv;
      }
      break;
    }
    case Op::Sum: {
      const double gv = pg[0];
      for (std::int64_t i = 0; i < ag.size(); ++i) pag[i] += gv;
      break;
    }
    case Op::Mean: {
      const double gv = pg[0] / static_cast<double>(ag.size());
      for (std::int64_t i = 0; i < ag.size(); ++i) pag[i] += gv;
      break;
    }
    case Op::TanhLogJacobian:
      // d/dx log(1 - tanh(x)^2) = -2 tanh(x)
      for (std::int64_t i = 0; i < size; ++i)
        pag[i] += pg[i] * (-2.0 * std::tanh(pa[i]));
      break;
    case Op::Constant:
    case Op::Param:
      break;
  }
}

}  // namespace piekd
