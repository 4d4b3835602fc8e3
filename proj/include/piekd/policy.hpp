#pragma once

#include <utility>
#include <vector>

#include "piekd/env.hpp"
#include "piekd/graph.hpp"
#include "piekd/mlp.hpp"
#include "piekd/rng.hpp"

namespace piekd {

// Stochastic policy: MLP trunk producing (mean, log-std) per action
// dimension, tanh-squashed and affinely rescaled into the action box.
// log-std is clamped to [-20, 2] before exponentiation, so sampled actions
// always land inside the box.
struct SquashedGaussianPolicy {
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  Mlp trunk;  // [state_dim, hidden..., 2 * action_dim]
  std::vector<double> center;     // (low + high) / 2
  std::vector<double> halfwidth;  // (high - low) / 2
  std::int64_t action_dim = 0;

  static SquashedGaussianPolicy make(const MdpSpec& spec,
                                     const std::vector<std::int64_t>& hidden,
                                     Rng& rng);

  // Pre-squash mean and clamped log-std for a batch of states.
  std::pair<Tensor, Tensor> dist(const Tensor& states) const;

  // One action for one state row. deterministic = squashed mean.
  Tensor act(const Tensor& state, Rng* rng, bool deterministic) const;

  struct Sample {
    Tensor actions;    // [n, action_dim]
    Tensor log_probs;  // [n, 1]
  };
  // Reparameterized draw with the tanh and affine-rescale corrections folded
  // into the log-prob. Noise consumed row-major from rng.
  Sample sample(const Tensor& states, Rng& rng) const;

  // Density of a given in-box action (inverse-tanh path); used by tests and
  // diagnostics rather than the training path.
  double log_prob_of(const Tensor& state, const Tensor& action) const;

  struct GraphSample {
    NodeId actions;
    NodeId log_probs;
  };
  // Graph twin of sample() for reparameterized policy gradients; noise is
  // supplied by the caller so the tape stays deterministic.
  GraphSample sample_graph(Graph& g, const Mlp::GraphRef& ref, NodeId states,
                           const Tensor& noise) const;

  struct GraphDist {
    NodeId mean;
    NodeId log_std;
  };
  GraphDist dist_graph(Graph& g, const Mlp::GraphRef& ref,
                       NodeId states) const;
};

}  // namespace piekd
