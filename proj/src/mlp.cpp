#include "piekd/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "piekd/kernels.hpp"

namespace piekd {

Mlp Mlp::init_uniform(std::vector<std::int64_t> widths, Rng& rng) {
  check(widths.size() >= 2, "mlp: need at least input and output widths");
  for (auto w : widths) check(w >= 1, "mlp: widths must be positive");
  Mlp net;
  net.widths = std::move(widths);
  for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
    const std::int64_t fan_in = net.widths[l];
    const std::int64_t fan_out = net.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w({fan_in, fan_out});
    for (std::int64_t i = 0; i < w.size(); ++i)
      w.at(i) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Tensor({1, fan_out}));
  }
  return net;
}

Tensor Mlp::forward(const Tensor& x) const {
  check(x.cols() == in_dim(), "mlp: input width ", x.cols(),
        " does not match ", in_dim());
  Tensor h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Tensor& w = weights[l];
    const std::int64_t rows = h.rows();
    const std::int64_t cols = w.cols();
    Tensor out({rows, cols});
    kern::matmul_nn(h.data(), w.data(), out.data(), rows, h.cols(), cols);
    const double* bias = biases[l].data();
    const bool hidden = l + 1 < weights.size();
    for (std::int64_t r = 0; r < rows; ++r) {
      double* row = out.data() + r * cols;
      if (hidden) {
        for (std::int64_t c = 0; c < cols; ++c)
          row[c] = std::max(row[c] + bias[c], 0.0);
      } else {
        for (std::int64_t c = 0; c < cols; ++c) row[c] += bias[c];
      }
    }
    h = std::move(out);
  }
  h.assert_finite("mlp_forward");
  return h;
}

Mlp::GraphRef Mlp::attach(Graph& g, bool trainable) const {
  GraphRef ref;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    ref.w.push_back(trainable ? g.param(weights[l]) : g.constant(weights[l]));
    ref.b.push_back(trainable ? g.param(biases[l]) : g.constant(biases[l]));
  }
  return ref;
}

NodeId Mlp::forward(Graph& g, const GraphRef& ref, NodeId x) const {
  check(g.value(x).cols() == in_dim(), "mlp: input width ",
        g.value(x).cols(), " does not match ", in_dim());
  NodeId h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = g.add(g.matmul(h, ref.w[l]), ref.b[l]);
    if (l + 1 < weights.size()) h = g.relu(h);
  }
  return h;
}

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Tensor*> Mlp::params() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<std::string> Mlp::param_names(const std::string& prefix) const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(prefix + ".w" + std::to_string(l));
    out.push_back(prefix + ".b" + std::to_string(l));
  }
  return out;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

std::vector<const Tensor*> Mlp::grads(const Graph& g, const GraphRef& ref) {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < ref.w.size(); ++l) {
    out.push_back(&g.adjoint(ref.w[l]));
    out.push_back(&g.adjoint(ref.b[l]));
  }
  return out;
}

}  // namespace piekd
