#include "piekd/sac.hpp"

#include <cmath>

namespace piekd {

namespace {

std::string batch_stats(const Batch& b) {
  auto minmax = [](const Tensor& t) {
    double lo = t.at(0), hi = t.at(0);
    for (std::int64_t i = 1; i < t.size(); ++i) {
      lo = std::min(lo, t.at(i));
      hi = std::max(hi, t.at(i));
    }
    return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
  };
  return "batch n=" + std::to_string(b.size()) + " state" +
         minmax(b.states) + " action" + minmax(b.actions) + " reward" +
         minmax(b.rewards);
}

}  // namespace

double Temperature::alpha() const { return std::exp(log_alpha(0, 0)); }

SacAgent SacAgent::make(const MdpSpec& spec, const SacConfig& cfg,
                        std::uint64_t seed) {
  SacAgent ag;
  Rng policy_rng(derive_seed(seed, 0));
  ag.policy = SquashedGaussianPolicy::make(spec, cfg.hidden, policy_rng);

  std::vector<std::int64_t> qwidths;
  qwidths.push_back(spec.state_dim + spec.action_dim);
  qwidths.insert(qwidths.end(), cfg.hidden.begin(), cfg.hidden.end());
  qwidths.push_back(1);
  for (int i = 0; i < 2; ++i) {
    Rng critic_rng(derive_seed(seed, static_cast<std::uint64_t>(1 + i)));
    ag.critics[i].net = Mlp::init_uniform(qwidths, critic_rng);
    ag.critics[i].target = ag.critics[i].net;  // targets start as copies
  }

  check(cfg.init_alpha > 0.0, "sac: init_alpha must be positive");
  ag.temperature.log_alpha = Tensor::scalar(std::log(cfg.init_alpha));
  ag.temperature.target_entropy = -static_cast<double>(spec.action_dim);

  ag.policy_opt =
      AdamState::for_params(ag.policy.trunk.params(), cfg.learning_rate);
  for (int i = 0; i < 2; ++i)
    ag.critic_opt[i] =
        AdamState::for_params(ag.critics[i].net.params(), cfg.learning_rate);
  std::vector<Tensor*> tp{&ag.temperature.log_alpha};
  ag.temp_opt = AdamState::for_params(tp, cfg.learning_rate);
  return ag;
}

double update_critic(SacAgent& agent, const Batch& batch, double gamma,
                     double alpha, Rng& rng) {
  check(batch.size() >= 1, "update_critic: empty batch");
  try {
    auto next = agent.policy.sample(batch.next_states, rng);
    Tensor in2 = Tensor::hconcat(batch.next_states, next.actions);
    Tensor q1t = agent.critics[0].target.forward(in2);
    Tensor q2t = agent.critics[1].target.forward(in2);

    const std::int64_t n = batch.size();
    Tensor y({n, 1});
    for (std::int64_t i = 0; i < n; ++i) {
      const double qmin = std::min(q1t(i, 0), q2t(i, 0));
      y(i, 0) = batch.rewards(i, 0) +
                gamma * (1.0 - batch.dones(i, 0)) *
                    (qmin - alpha * next.log_probs(i, 0));
    }
    y.assert_finite("critic_target");

    Graph g;
    g.reserve(64);
    NodeId sa = g.concat_cols(g.constant(batch.states),
                              g.constant(batch.actions));
    auto ref0 = agent.critics[0].net.attach(g);
    auto ref1 = agent.critics[1].net.attach(g);
    NodeId q1 = agent.critics[0].net.forward(g, ref0, sa);
    NodeId q2 = agent.critics[1].net.forward(g, ref1, sa);
    NodeId yc = g.constant(std::move(y));
    NodeId loss = g.scale(g.add(g.mean(g.square(g.sub(q1, yc))),
                                g.mean(g.square(g.sub(q2, yc)))),
                          0.5);
    g.backward(loss);

    for (int i = 0; i < 2; ++i) {
      auto params = agent.critics[i].net.params();
      auto grads = Mlp::grads(g, i == 0 ? ref0 : ref1);
      auto names = agent.critics[i].net.param_names(
          "critic" + std::to_string(i));
      agent.critic_opt[i].apply(params, grads, names);
    }
    return g.scalar_value(loss);
  } catch (const Error& e) {
    fail("update_critic: ", e.what(), "; ", batch_stats(batch));
  }
}

double update_policy(SacAgent& agent, const Batch& batch, double alpha,
                     Rng& rng, Tensor* log_probs_out) {
  check(batch.size() >= 1, "update_policy: empty batch");
  try {
    const std::int64_t n = batch.size();
    Tensor noise({n, agent.policy.action_dim});
    for (std::int64_t i = 0; i < noise.size(); ++i) noise.at(i) = rng.normal();

    Graph g;
    g.reserve(96);
    NodeId s = g.constant(batch.states);
    auto pref = agent.policy.trunk.attach(g);
    auto smp = agent.policy.sample_graph(g, pref, s, noise);
    NodeId sa = g.concat_cols(s, smp.actions);
    auto ref0 = agent.critics[0].net.attach(g, /*trainable=*/false);
    auto ref1 = agent.critics[1].net.attach(g, /*trainable=*/false);
    NodeId q1 = agent.critics[0].net.forward(g, ref0, sa);
    NodeId q2 = agent.critics[1].net.forward(g, ref1, sa);
    NodeId loss =
        g.mean(g.sub(g.scale(smp.log_probs, alpha), g.minimum(q1, q2)));
    g.backward(loss);

    auto params = agent.policy.trunk.params();
    auto grads = Mlp::grads(g, pref);
    auto names = agent.policy.trunk.param_names("policy");
    agent.policy_opt.apply(params, grads, names);

    if (log_probs_out) *log_probs_out = g.value(smp.log_probs);
    return g.scalar_value(loss);
  } catch (const Error& e) {
    fail("update_policy: ", e.what(), "; ", batch_stats(batch));
  }
}

double update_temperature(SacAgent& agent, const Tensor& log_probs) {
  double mean_lp = 0.0;
  for (std::int64_t i = 0; i < log_probs.size(); ++i)
    mean_lp += log_probs.at(i);
  mean_lp /= static_cast<double>(log_probs.size());

  // loss(log_alpha) = -exp(log_alpha) * (mean_lp + target_entropy)
  // d loss / d log_alpha = -alpha * (mean_lp + target_entropy)
  const double c = mean_lp + agent.temperature.target_entropy;
  Tensor grad = Tensor::scalar(-agent.temperature.alpha() * c);
  std::vector<Tensor*> params{&agent.temperature.log_alpha};
  const Tensor* gp = &grad;
  static const std::vector<std::string> names{"log_alpha"};
  agent.temp_opt.apply(params, {&gp, 1}, names);
  return agent.temperature.alpha();
}

void polyak_update(Critic& critic, double rho) {
  check(rho > 0.0 && rho <= 1.0, "polyak: rho must be in (0,1], got ", rho);
  auto online = critic.net.params();
  auto target = critic.target.params();
  for (std::size_t i = 0; i < online.size(); ++i) {
    Tensor& t = *target[i];
    const Tensor& o = *online[i];
    for (std::int64_t j = 0; j < t.size(); ++j)
      t.at(j) = (1.0 - rho) * t.at(j) + rho * o.at(j);
  }
}

StepLosses update_step(SacAgent& agent, const Batch& batch,
                       const SacConfig& cfg, Rng& rng) {
  const double alpha = agent.temperature.alpha();
  StepLosses out;
  out.critic = update_critic(agent, batch, cfg.discount, alpha, rng);
  Tensor log_probs;
  out.policy = update_policy(agent, batch, alpha, rng, &log_probs);
  out.alpha = update_temperature(agent, log_probs);
  polyak_update(agent.critics[0], cfg.polyak);
  polyak_update(agent.critics[1], cfg.polyak);
  return out;
}

ActionFn make_actor(const SquashedGaussianPolicy& policy, Rng* rng,
                    bool deterministic) {
  return [&policy, rng, deterministic](const Tensor& state) {
    return policy.act(state, rng, deterministic);
  };
}

}  // namespace piekd
