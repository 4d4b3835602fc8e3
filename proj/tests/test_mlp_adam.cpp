#include <doctest.h>

#include <cmath>

#include "piekd/adam.hpp"
#include "piekd/mlp.hpp"
#include "piekd/rng.hpp"

#include "helpers.hpp"

using namespace piekd;

TEST_SUITE("mlp") {

TEST_CASE("init_uniform is seed-deterministic") {
  Rng a(3), b(3), c(4);
  Mlp m1 = Mlp::init_uniform({4, 8, 2}, a);
  Mlp m2 = Mlp::init_uniform({4, 8, 2}, b);
  Mlp m3 = Mlp::init_uniform({4, 8, 2}, c);
  for (std::size_t l = 0; l < m1.weights.size(); ++l) {
    CHECK(m1.weights[l].bitwise_equal(m2.weights[l]));
    CHECK(m1.biases[l].bitwise_equal(m2.biases[l]));
  }
  bool any_diff = false;
  for (std::size_t l = 0; l < m1.weights.size(); ++l)
    if (!m1.weights[l].bitwise_equal(m3.weights[l])) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("init bounds and empirical mean") {
  Rng rng(2024);
  // fan_in 4 -> bound 0.5; mean of 1e4 samples within +-0.02 of 0
  Mlp m = Mlp::init_uniform({4, 2500}, rng);
  const Tensor& w = m.weights[0];
  REQUIRE(w.size() == 10000);
  double s = 0.0;
  for (std::int64_t i = 0; i < w.size(); ++i) {
    CHECK(std::fabs(w.at(i)) <= 0.5);
    s += w.at(i);
  }
  CHECK(std::fabs(s / static_cast<double>(w.size())) < 0.02);
  for (std::int64_t i = 0; i < m.biases[0].size(); ++i)
    CHECK(m.biases[0].at(i) == 0.0);
}

TEST_CASE("plain and graph forward agree") {
  Rng rng(77);
  Mlp m = Mlp::init_uniform({3, 16, 16, 2}, rng);
  auto x = piekd::testing::random_tensor({5, 3}, rng);
  Tensor plain = m.forward(x);
  Graph g;
  auto ref = m.attach(g);
  NodeId out = m.forward(g, ref, g.constant(x));
  CHECK(plain.bitwise_equal(g.value(out)));
}

TEST_CASE("mlp adjoints match central finite differences") {
  Rng rng(4242);
  Mlp net = Mlp::init_uniform({3, 12, 8, 1}, rng);
  auto x = piekd::testing::random_tensor({6, 3}, rng);
  auto eval = [&]() {
    Graph g;
    auto ref = net.attach(g);
    return g.scalar_value(g.mean(g.square(net.forward(g, ref, g.constant(x)))));
  };
  Graph g;
  auto ref = net.attach(g);
  g.backward(g.mean(g.square(net.forward(g, ref, g.constant(x)))));
  std::vector<Tensor> adjoints;
  for (auto* t : Mlp::grads(g, ref)) adjoints.push_back(*t);
  const double err = piekd::testing::max_rel_grad_error(net, eval, adjoints);
  CHECK(err < 1e-4);
}

}  // TEST_SUITE

TEST_SUITE("adam") {

TEST_CASE("zero gradient is the identity for any number of steps") {
  Rng rng(1);
  Mlp net = Mlp::init_uniform({2, 4, 1}, rng);
  Mlp before = net;
  auto params = net.params();
  AdamState st = AdamState::for_params(params, 1e-3);
  std::vector<Tensor> zero_grads;
  for (auto* p : params) zero_grads.push_back(Tensor({p->rows(), p->cols()}));
  std::vector<const Tensor*> gptrs;
  for (auto& t : zero_grads) gptrs.push_back(&t);
  for (int i = 0; i < 17; ++i) st.apply(params, gptrs);
  CHECK(st.step_count == 17);
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    CHECK(net.weights[l].bitwise_equal(before.weights[l]));
}

TEST_CASE("first step with unit gradient moves by about lr") {
  Tensor p = Tensor::scalar(0.0);
  Tensor g = Tensor::scalar(1.0);
  std::vector<Tensor*> params{&p};
  AdamState st = AdamState::for_params(params, 1e-3);
  const Tensor* gp = &g;
  st.apply(params, {&gp, 1});
  // bias correction makes step one exactly lr/(1+eps)
  CHECK(p(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(st.step_count == 1);
}

TEST_CASE("two constant-gradient steps") {
  Tensor p = Tensor::scalar(0.0);
  Tensor g = Tensor::scalar(0.5);
  std::vector<Tensor*> params{&p};
  AdamState st = AdamState::for_params(params, 1e-3);
  const Tensor* gp = &g;
  st.apply(params, {&gp, 1});
  st.apply(params, {&gp, 1});
  CHECK(st.step_count == 2);
  CHECK(st.v[0](0, 0) > 0.0);
}

TEST_CASE("NaN gradient reports the parameter name") {
  Tensor p = Tensor::scalar(0.0);
  Tensor g = Tensor::scalar(std::nan(""));
  std::vector<Tensor*> params{&p};
  AdamState st = AdamState::for_params(params, 1e-3);
  const Tensor* gp = &g;
  std::vector<std::string> names{"policy.w0"};
  try {
    st.apply(params, {&gp, 1}, names);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("policy.w0") != std::string::npos);
  }
}

}  // TEST_SUITE
