#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "piekd/graph.hpp"
#include "piekd/rng.hpp"
#include "piekd/tensor.hpp"

namespace piekd {

// Fully connected net with ReLU hidden activations and a linear output.
// Weights are [in, out] so a batch forward is x * W + b (b broadcast [1, out]).
struct Mlp {
  std::vector<std::int64_t> widths;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  // Weights uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
  static Mlp init_uniform(std::vector<std::int64_t> widths, Rng& rng);

  std::size_t layer_count() const { return weights.size(); }
  std::int64_t in_dim() const { return widths.front(); }
  std::int64_t out_dim() const { return widths.back(); }

  Tensor forward(const Tensor& x) const;

  // Graph-attached forward for differentiation. Trainable attachment tracks
  // parameter adjoints; frozen attachment (e.g. critics inside the policy
  // loss) enters the parameters as constants so backward skips their
  // gradients while still differentiating through the activations.
  struct GraphRef {
    std::vector<NodeId> w;
    std::vector<NodeId> b;
  };
  GraphRef attach(Graph& g, bool trainable = true) const;
  NodeId forward(Graph& g, const GraphRef& ref, NodeId x) const;

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  std::vector<std::string> param_names(const std::string& prefix) const;
  std::size_t param_count() const;
  bool same_architecture(const Mlp& o) const { return widths == o.widths; }

  // Gradients for params() in matching order.
  static std::vector<const Tensor*> grads(const Graph& g, const GraphRef& ref);
};

}  // namespace piekd
