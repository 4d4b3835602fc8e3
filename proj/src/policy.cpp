#include "piekd/policy.hpp"

#include <cmath>

namespace piekd {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727417803297;  // 0.5*log(2*pi)

double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// log(1 + e^x) without overflow
double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// log(1 - tanh(x)^2), stable for large |x|
double tanh_log_jac(double x) {
  constexpr double kLog2 = 0.6931471805599453094172321;
  return 2.0 * (kLog2 - x - softplus(-2.0 * x));
}

}  // namespace

SquashedGaussianPolicy SquashedGaussianPolicy::make(
    const MdpSpec& spec, const std::vector<std::int64_t>& hidden, Rng& rng) {
  SquashedGaussianPolicy p;
  p.action_dim = spec.action_dim;
  std::vector<std::int64_t> widths;
  widths.push_back(spec.state_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * spec.action_dim);
  p.trunk = Mlp::init_uniform(std::move(widths), rng);
  for (int i = 0; i < spec.action_dim; ++i) {
    check(spec.action_low[i] < spec.action_high[i],
          "policy: action box degenerate in dim ", i);
    p.center.push_back(0.5 * (spec.action_low[i] + spec.action_high[i]));
    p.halfwidth.push_back(0.5 * (spec.action_high[i] - spec.action_low[i]));
  }
  return p;
}

std::pair<Tensor, Tensor> SquashedGaussianPolicy::dist(
    const Tensor& states) const {
  Tensor out = trunk.forward(states);
  const std::int64_t n = states.rows();
  Tensor mu({n, action_dim});
  Tensor log_std({n, action_dim});
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < action_dim; ++c) {
      mu(r, c) = out(r, c);
      log_std(r, c) = clamp(out(r, action_dim + c), kLogStdMin, kLogStdMax);
    }
  return {std::move(mu), std::move(log_std)};
}

Tensor SquashedGaussianPolicy::act(const Tensor& state, Rng* rng,
                                   bool deterministic) const {
  auto [mu, log_std] = dist(state);
  Tensor a({1, action_dim});
  for (std::int64_t c = 0; c < action_dim; ++c) {
    double z = mu(0, c);
    if (!deterministic) z += std::exp(log_std(0, c)) * rng->normal();
    a(0, c) = center[static_cast<std::size_t>(c)] +
              halfwidth[static_cast<std::size_t>(c)] * std::tanh(z);
  }
  return a;
}

SquashedGaussianPolicy::Sample SquashedGaussianPolicy::sample(
    const Tensor& states, Rng& rng) const {
  auto [mu, log_std] = dist(states);
  const std::int64_t n = states.rows();
  Sample s{Tensor({n, action_dim}), Tensor({n, 1})};
  for (std::int64_t r = 0; r < n; ++r) {
    double lp = 0.0;
    for (std::int64_t c = 0; c < action_dim; ++c) {
      const double xi = rng.normal();
      const double z = mu(r, c) + std::exp(log_std(r, c)) * xi;
      s.actions(r, c) = center[static_cast<std::size_t>(c)] +
                        halfwidth[static_cast<std::size_t>(c)] * std::tanh(z);
      lp += -0.5 * xi * xi - log_std(r, c) - kHalfLog2Pi - tanh_log_jac(z) -
            std::log(halfwidth[static_cast<std::size_t>(c)]);
    }
    s.log_probs(r, 0) = lp;
  }
  s.log_probs.assert_finite("policy_sample");
  return s;
}

double SquashedGaussianPolicy::log_prob_of(const Tensor& state,
                                           const Tensor& action) const {
  auto [mu, log_std] = dist(state);
  double lp = 0.0;
  for (std::int64_t c = 0; c < action_dim; ++c) {
    const double hw = halfwidth[static_cast<std::size_t>(c)];
    const double y = (action(0, c) - center[static_cast<std::size_t>(c)]) / hw;
    check(y > -1.0 && y < 1.0, "log_prob_of: action outside the open box");
    const double z = std::atanh(y);
    const double sd = std::exp(log_std(0, c));
    const double u = (z - mu(0, c)) / sd;
    lp += -0.5 * u * u - log_std(0, c) - kHalfLog2Pi - tanh_log_jac(z) -
          std::log(hw);
  }
  return lp;
}

SquashedGaussianPolicy::GraphDist SquashedGaussianPolicy::dist_graph(
    Graph& g, const Mlp::GraphRef& ref, NodeId states) const {
  NodeId out = trunk.forward(g, ref, states);
  NodeId mu = g.slice_cols(out, 0, action_dim);
  NodeId log_std =
      g.clamp(g.slice_cols(out, action_dim, 2 * action_dim), kLogStdMin,
              kLogStdMax);
  return {mu, log_std};
}

SquashedGaussianPolicy::GraphSample SquashedGaussianPolicy::sample_graph(
    Graph& g, const Mlp::GraphRef& ref, NodeId states,
    const Tensor& noise) const {
  auto [mu, log_std] = dist_graph(g, ref, states);
  const std::int64_t n = g.value(states).rows();
  check(noise.rows() == n && noise.cols() == action_dim,
        "sample_graph: noise shape ", noise.shape_str());

  NodeId std_ = g.exp(log_std);
  NodeId z = g.add(mu, g.mul(std_, g.constant(noise)));
  NodeId y = g.tanh(z);
  NodeId actions =
      g.add(g.mul(y, g.constant(Tensor::row(halfwidth))),
            g.constant(Tensor::row(center)));

  // Per-element constant part of the log-prob:
  // -xi^2/2 - log(2*pi)/2 - log(halfwidth_c)
  Tensor base({n, action_dim});
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < action_dim; ++c)
      base(r, c) = -0.5 * noise(r, c) * noise(r, c) - kHalfLog2Pi -
                   std::log(halfwidth[static_cast<std::size_t>(c)]);
  NodeId lp_elems =
      g.sub(g.constant(std::move(base)), g.add(log_std, g.tanh_log_jacobian(z)));
  NodeId log_probs = g.row_sum(lp_elems);
  return {actions, log_probs};
}

}  // namespace piekd
