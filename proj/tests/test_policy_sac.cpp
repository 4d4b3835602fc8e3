#include <doctest.h>

#include <cmath>

#include "piekd/sac.hpp"

#include "helpers.hpp"

using namespace piekd;

namespace {

MdpSpec pendulum_like() {
  MdpSpec s;
  s.state_dim = 3;
  s.action_dim = 1;
  s.action_low = {-2.0};
  s.action_high = {2.0};
  s.episode_length = 200;
  return s;
}

SacConfig small_cfg() {
  SacConfig c;
  c.hidden = {16, 16};
  c.batch_size = 32;
  return c;
}

Batch random_batch(const MdpSpec& spec, std::int64_t n, Rng& rng) {
  Batch b;
  b.states = piekd::testing::random_tensor({n, spec.state_dim}, rng);
  b.actions = piekd::testing::random_tensor({n, spec.action_dim}, rng,
                                            spec.action_low[0] * 0.9,
                                            spec.action_high[0] * 0.9);
  b.rewards = piekd::testing::random_tensor({n, 1}, rng, -2.0, 0.0);
  b.next_states = piekd::testing::random_tensor({n, spec.state_dim}, rng);
  b.dones = Tensor({n, 1});
  return b;
}

std::vector<Tensor> snapshot(const Mlp& m) {
  std::vector<Tensor> out;
  for (const auto* t : m.params()) out.push_back(*t);
  return out;
}

bool equals_snapshot(const Mlp& m, const std::vector<Tensor>& snap) {
  auto ps = m.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (!ps[i]->bitwise_equal(snap[i])) return false;
  return true;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("deterministic action is the rescaled squashed mean") {
  Rng rng(10);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {16, 16}, rng);
  Tensor s = piekd::testing::random_tensor({1, 3}, rng);
  auto [mu, log_std] = pol.dist(s);
  Tensor a = pol.act(s, nullptr, true);
  CHECK(a(0, 0) == doctest::Approx(2.0 * std::tanh(mu(0, 0))).epsilon(1e-12));
}

TEST_CASE("sigma -> 0 limit recovers the deterministic action") {
  Rng rng(11);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {8}, rng);
  // force the log-std head hard negative: clamp floors it at -20
  Tensor& w = pol.trunk.weights.back();
  Tensor& b = pol.trunk.biases.back();
  for (std::int64_t r = 0; r < w.rows(); ++r) w(r, 1) = 0.0;
  b(0, 1) = -50.0;
  Tensor s = piekd::testing::random_tensor({1, 3}, rng);
  Rng noise(3);
  Tensor sampled = pol.act(s, &noise, false);
  Tensor det = pol.act(s, nullptr, true);
  CHECK(std::fabs(sampled(0, 0) - det(0, 0)) < 1e-6);
}

TEST_CASE("sampled actions stay strictly inside the box") {
  Rng rng(12);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {16, 16}, rng);
  Rng noise(5);
  for (int i = 0; i < 10000; ++i) {
    Tensor s = piekd::testing::random_tensor({1, 3}, rng);
    Tensor a = pol.act(s, &noise, false);
    CHECK(a(0, 0) > spec.action_low[0]);
    CHECK(a(0, 0) < spec.action_high[0]);
  }
}

TEST_CASE("plain and graph log-probs agree given the same noise") {
  Rng rng(13);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {16, 16}, rng);
  Tensor states = piekd::testing::random_tensor({7, 3}, rng);

  Rng noise_a(21);
  auto plain = pol.sample(states, noise_a);

  Rng noise_b(21);
  Tensor noise({7, 1});
  for (std::int64_t i = 0; i < noise.size(); ++i)
    noise.at(i) = noise_b.normal();
  Graph g;
  auto ref = pol.trunk.attach(g);
  auto smp = pol.sample_graph(g, ref, g.constant(states), noise);

  // not bitwise: the plain path fuses center + hw*tanh(z) into one fma
  for (std::int64_t i = 0; i < 7; ++i) {
    CHECK(g.value(smp.actions)(i, 0) ==
          doctest::Approx(plain.actions(i, 0)).epsilon(1e-14));
    CHECK(g.value(smp.log_probs)(i, 0) ==
          doctest::Approx(plain.log_probs(i, 0)).epsilon(1e-12));
  }
}

TEST_CASE("log_prob_of matches the sampling-path log-prob") {
  Rng rng(14);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {16}, rng);
  Tensor s = piekd::testing::random_tensor({1, 3}, rng);
  Rng noise(9);
  auto smp = pol.sample(s, noise);
  const double lp = pol.log_prob_of(s, smp.actions);
  CHECK(lp == doctest::Approx(smp.log_probs(0, 0)).epsilon(1e-9));
}

TEST_CASE("Monte Carlo density matches exp(log-prob) on the central bin") {
  Rng rng(15);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {16}, rng);
  Tensor s({1, 3}, {0.3, -0.2, 0.5});

  const Tensor mode = pol.act(s, nullptr, true);
  const double width = 0.05;
  const double lo = mode(0, 0) - width / 2.0;
  const int n = 100000;
  Rng noise(77);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    Tensor a = pol.act(s, &noise, false);
    if (a(0, 0) >= lo && a(0, 0) < lo + width) ++hits;
  }
  const double empirical = static_cast<double>(hits) / n / width;
  const double density = std::exp(pol.log_prob_of(s, mode));
  CHECK(std::fabs(empirical - density) / density < 0.05);
}

TEST_CASE("density integrates to one over the box") {
  Rng rng(16);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {16, 16}, rng);
  Tensor s({1, 3}, {-0.4, 0.9, -1.2});
  // Monte Carlo over uniform actions: E[p(a)] * volume = integral of p
  const int n = 200000;
  Rng u(31);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    Tensor a({1, 1}, {u.uniform(-2.0, 2.0)});
    acc += std::exp(pol.log_prob_of(s, a));
  }
  const double integral = acc / n * 4.0;
  CHECK(std::fabs(integral - 1.0) < 0.02);
}

}  // TEST_SUITE

TEST_SUITE("sac") {

TEST_CASE("degenerate target: gamma=0, alpha=0 regresses to batch rewards") {
  Rng rng(20);
  auto spec = pendulum_like();
  SacConfig cfg = small_cfg();
  cfg.learning_rate = 1e-3;
  SacAgent ag = SacAgent::make(spec, cfg, 42);
  Batch b = random_batch(spec, 32, rng);
  Rng step_rng(1);
  double loss = 0.0;
  for (int i = 0; i < 5000; ++i)
    loss = update_critic(ag, b, 0.0, 0.0, step_rng);
  CHECK(loss < 1e-3);
}

TEST_CASE("critic loss finite, non-negative; target untouched before polyak") {
  Rng rng(21);
  auto spec = pendulum_like();
  SacAgent ag = SacAgent::make(spec, small_cfg(), 7);
  Batch b = random_batch(spec, 16, rng);
  auto t0 = snapshot(ag.critics[0].target);
  auto t1 = snapshot(ag.critics[1].target);
  Rng step_rng(2);
  const double loss = update_critic(ag, b, 0.99, 0.2, step_rng);
  CHECK(loss >= 0.0);
  CHECK(std::isfinite(loss));
  CHECK(equals_snapshot(ag.critics[0].target, t0));
  CHECK(equals_snapshot(ag.critics[1].target, t1));
}

TEST_CASE("policy update leaves critic parameters bitwise unchanged") {
  Rng rng(22);
  auto spec = pendulum_like();
  SacAgent ag = SacAgent::make(spec, small_cfg(), 8);
  Batch b = random_batch(spec, 16, rng);
  auto c0 = snapshot(ag.critics[0].net);
  auto c1 = snapshot(ag.critics[1].net);
  auto p0 = snapshot(ag.policy.trunk);
  Rng step_rng(3);
  Tensor lp;
  const double loss = update_policy(ag, b, 0.2, step_rng, &lp);
  CHECK(std::isfinite(loss));
  CHECK(equals_snapshot(ag.critics[0].net, c0));
  CHECK(equals_snapshot(ag.critics[1].net, c1));
  CHECK_FALSE(equals_snapshot(ag.policy.trunk, p0));
  CHECK(lp.rows() == 16);
}

TEST_CASE("frozen hand-built critic pulls the squashed mean toward its peak") {
  // critic Q(s,a) = -|a - 0.5| built from two ReLU units; policy updates
  // should move the deterministic action toward 0.5
  Rng rng(23);
  auto spec = pendulum_like();
  SacConfig cfg = small_cfg();
  SacAgent ag = SacAgent::make(spec, cfg, 9);

  for (int i = 0; i < 2; ++i) {
    Mlp critic;
    critic.widths = {4, 2, 1};
    Tensor w1({4, 2});
    w1(3, 0) = 1.0;   // h0 = relu(a - 0.5)
    w1(3, 1) = -1.0;  // h1 = relu(0.5 - a)
    Tensor b1({1, 2}, {-0.5, 0.5});
    Tensor w2({2, 1}, {-1.0, -1.0});
    Tensor b2({1, 1});
    critic.weights = {w1, w2};
    critic.biases = {b1, b2};
    ag.critics[i].net = critic;
    ag.critics[i].target = critic;
  }

  Rng srng(4);
  Batch b = random_batch(spec, 64, srng);
  Tensor probe = piekd::testing::random_tensor({1, 3}, srng);
  const double before =
      std::fabs(ag.policy.act(probe, nullptr, true)(0, 0) - 0.5);
  Rng step_rng(5);
  for (int i = 0; i < 500; ++i) {
    Tensor lp;
    update_policy(ag, b, 1e-8, step_rng, &lp);  // negligible entropy weight
  }
  const double after =
      std::fabs(ag.policy.act(probe, nullptr, true)(0, 0) - 0.5);
  CHECK(after < before);
  CHECK(after < 0.2);
}

TEST_CASE("temperature: zero gradient at target entropy, alpha stays positive") {
  auto spec = pendulum_like();
  SacAgent ag = SacAgent::make(spec, small_cfg(), 10);
  const double a0 = ag.temperature.alpha();
  // mean log pi == -target_entropy => gradient is exactly zero
  Tensor lp({4, 1});
  lp.fill(-ag.temperature.target_entropy);
  const double a1 = update_temperature(ag, lp);
  CHECK(a1 == a0);
  CHECK(a1 > 0.0);
}

TEST_CASE("temperature rises when entropy is far below target") {
  auto spec = pendulum_like();
  SacAgent ag = SacAgent::make(spec, small_cfg(), 11);
  const double a0 = ag.temperature.alpha();
  Tensor lp({8, 1});
  lp.fill(5.0);  // log pi high -> entropy far below target
  double a = a0;
  for (int i = 0; i < 100; ++i) a = update_temperature(ag, lp);
  CHECK(a > a0);
  CHECK(a > 0.0);
}

TEST_CASE("polyak arithmetic") {
  Rng rng(24);
  auto spec = pendulum_like();
  SacAgent ag = SacAgent::make(spec, small_cfg(), 12);

  SUBCASE("rho = 1 copies online exactly") {
    polyak_update(ag.critics[0], 1.0);
    auto on = ag.critics[0].net.params();
    auto tg = ag.critics[0].target.params();
    for (std::size_t i = 0; i < on.size(); ++i)
      CHECK(on[i]->bitwise_equal(*tg[i]));
  }
  SUBCASE("identical nets are a fixed point") {
    ag.critics[0].target = ag.critics[0].net;
    auto before = snapshot(ag.critics[0].target);
    polyak_update(ag.critics[0], 0.005);
    CHECK(equals_snapshot(ag.critics[0].target, before));
  }
  SUBCASE("two rho=0.5 steps from (target 0, online 1) give 0.75") {
    for (auto* t : ag.critics[0].net.params()) t->fill(1.0);
    for (auto* t : ag.critics[0].target.params()) t->fill(0.0);
    polyak_update(ag.critics[0], 0.5);
    polyak_update(ag.critics[0], 0.5);
    for (auto* t : ag.critics[0].target.params())
      for (std::int64_t j = 0; j < t->size(); ++j)
        CHECK(t->at(j) == 0.75);
  }
  SUBCASE("rho outside (0,1] is rejected") {
    CHECK_THROWS_AS(polyak_update(ag.critics[0], 0.0), Error);
    CHECK_THROWS_AS(polyak_update(ag.critics[0], 1.5), Error);
  }
}

TEST_CASE("update_step is deterministic given parameters, batch, and seed") {
  Rng rng(25);
  auto spec = pendulum_like();
  SacConfig cfg = small_cfg();
  Batch b = random_batch(spec, 16, rng);

  auto run = [&]() {
    SacAgent ag = SacAgent::make(spec, cfg, 77);
    Rng step_rng(6);
    StepLosses l{};
    for (int i = 0; i < 3; ++i) l = update_step(ag, b, cfg, step_rng);
    return std::tuple{l.critic, l.policy, l.alpha,
                      snapshot(ag.policy.trunk)};
  };
  auto [c1, p1, a1, s1] = run();
  auto [c2, p2, a2, s2] = run();
  CHECK(c1 == c2);
  CHECK(p1 == p2);
  CHECK(a1 == a2);
  for (std::size_t i = 0; i < s1.size(); ++i)
    CHECK(s1[i].bitwise_equal(s2[i]));
}

TEST_CASE("policy-loss gradients match finite differences") {
  // composition check over the full reparameterized sampling path
  Rng rng(26);
  auto spec = pendulum_like();
  auto pol = SquashedGaussianPolicy::make(spec, {8}, rng);
  Tensor states = piekd::testing::random_tensor({5, 3}, rng);
  Tensor noise = Tensor({5, 1});
  Rng nr(17);
  for (std::int64_t i = 0; i < noise.size(); ++i) noise.at(i) = nr.normal();

  auto eval = [&]() {
    Graph g;
    auto ref = pol.trunk.attach(g);
    auto smp = pol.sample_graph(g, ref, g.constant(states), noise);
    // alpha * logp - sum(actions) as a stand-in for the critic term
    return g.scalar_value(
        g.mean(g.sub(g.scale(smp.log_probs, 0.2), g.row_sum(smp.actions))));
  };
  Graph g;
  auto ref = pol.trunk.attach(g);
  auto smp = pol.sample_graph(g, ref, g.constant(states), noise);
  g.backward(
      g.mean(g.sub(g.scale(smp.log_probs, 0.2), g.row_sum(smp.actions))));
  std::vector<Tensor> adjoints;
  for (auto* t : Mlp::grads(g, ref)) adjoints.push_back(*t);
  const double err =
      piekd::testing::max_rel_grad_error(pol.trunk, eval, adjoints);
  CHECK(err < 1e-4);
}

}  // TEST_SUITE
