#include "piekd/distill.hpp"

#include <cmath>

#include "piekd/par.hpp"

namespace piekd {

const char* to_string(DistillMode m) {
  switch (m) {
    case DistillMode::None: return "none";
    case DistillMode::Distill: return "distill";
    case DistillMode::Hardcopy: return "hardcopy";
  }
  return "?";
}

const char* to_string(TeacherRule r) {
  return r == TeacherRule::Best ? "best" : "random";
}

const char* to_string(DistillSource s) {
  return s == DistillSource::All ? "all" : "teacher";
}

int elect_teacher(const std::vector<Member>& members, TeacherRule rule,
                  Rng& rng) {
  check(!members.empty(), "elect_teacher: empty ensemble");
  if (rule == TeacherRule::Random)
    return static_cast<int>(rng.uniform_index(members.size()));
  int best = -1;
  double best_r = 0.0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].window.empty()) continue;
    const double r = members[k].window.mean();
    if (best < 0 || r > best_r) {
      best = static_cast<int>(k);
      best_r = r;
    }
  }
  check(best >= 0,
        "elect_teacher: every member's return window is empty; no eligible "
        "teacher");
  return best;
}

namespace {

Batch sample_states(const ReplayBuffer& buffer, const DistillConfig& cfg,
                    int teacher_actor, Rng& rng) {
  if (cfg.source == DistillSource::Teacher)
    return buffer.sample_from_actor(teacher_actor,
                                    static_cast<std::size_t>(cfg.batch_size),
                                    rng);
  return buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);
}

// Mean over the batch of the closed-form KL( teacher || student ) between
// the pre-squash diagonal Gaussians:
//   sum_i (ls_s - ls_t) + exp(2(ls_t - ls_s))/2 + (mt - ms)^2 exp(-2 ls_s)/2
//         - 1/2
// Written in difference form so identical parameters give exactly zero KL
// and exactly zero gradients.
NodeId kl_node(Graph& g, const SquashedGaussianPolicy& student,
               const Mlp::GraphRef& sref, NodeId states, const Tensor& mu_t,
               const Tensor& log_std_t) {
  auto dist = student.dist_graph(g, sref, states);
  NodeId d = g.sub(dist.log_std, g.constant(log_std_t));
  NodeId var_ratio = g.scale(g.exp(g.scale(d, -2.0)), 0.5);
  NodeId diff = g.sub(g.constant(mu_t), dist.mean);
  NodeId mean_term =
      g.scale(g.mul(g.square(diff), g.exp(g.scale(dist.log_std, -2.0))), 0.5);
  NodeId elem = g.shift(g.add(g.add(d, var_ratio), mean_term), -0.5);
  return g.mean(g.row_sum(elem));
}

}  // namespace

double policy_kl(const SacAgent& student, const SacAgent& teacher,
                 const Tensor& states, std::vector<Tensor>* grads_out) {
  auto [mu_t, ls_t] = teacher.policy.dist(states);
  Graph g;
  auto sref = student.policy.trunk.attach(g);
  NodeId kl = kl_node(g, student.policy, sref, g.constant(states), mu_t,
                      ls_t);
  if (grads_out) {
    g.backward(kl);
    grads_out->clear();
    for (const Tensor* t : Mlp::grads(g, sref)) grads_out->push_back(*t);
  }
  return g.scalar_value(kl);
}

DistillResult distill_policy(SacAgent& student, const SacAgent& teacher,
                             const ReplayBuffer& buffer,
                             const DistillConfig& cfg, int teacher_actor,
                             Rng& rng) {
  check(cfg.steps >= 1, "distill_policy: steps must be >= 1");
  check(buffer.size() >= 1, "distill_policy: empty buffer");
  auto params = student.policy.trunk.params();
  AdamState opt = AdamState::for_params(params, cfg.learning_rate);
  auto names = student.policy.trunk.param_names("student_policy");

  DistillResult res;
  for (int step = 0; step < cfg.steps; ++step) {
    Batch b = sample_states(buffer, cfg, teacher_actor, rng);
    auto [mu_t, ls_t] = teacher.policy.dist(b.states);
    Graph g;
    auto sref = student.policy.trunk.attach(g);
    NodeId kl = kl_node(g, student.policy, sref, g.constant(b.states), mu_t,
                        ls_t);
    const double kl_value = g.scalar_value(kl);
    if (!std::isfinite(kl_value))
      fail("distill_policy: non-finite KL at step ", step);
    if (step == 0) res.initial = kl_value;
    g.backward(kl);
    opt.apply(params, Mlp::grads(g, sref), names);
  }
  Batch b = sample_states(buffer, cfg, teacher_actor, rng);
  res.final = policy_kl(student, teacher, b.states);
  return res;
}

DistillResult distill_critic(SacAgent& student, const SacAgent& teacher,
                             const ReplayBuffer& buffer,
                             const DistillConfig& cfg, int teacher_actor,
                             Rng& rng) {
  check(cfg.steps >= 1, "distill_critic: steps must be >= 1");
  check(buffer.size() >= 1, "distill_critic: empty buffer");
  std::array<std::vector<Tensor*>, 2> params{
      student.critics[0].net.params(), student.critics[1].net.params()};
  std::array<AdamState, 2> opt{
      AdamState::for_params(params[0], cfg.learning_rate),
      AdamState::for_params(params[1], cfg.learning_rate)};

  auto mse_pair = [&](const Batch& b, bool update) {
    Graph g;
    NodeId sa = g.concat_cols(g.constant(b.states), g.constant(b.actions));
    const Tensor sa_plain = Tensor::hconcat(b.states, b.actions);
    double total = 0.0;
    for (int i = 0; i < 2; ++i) {
      Tensor qt = teacher.critics[i].net.forward(sa_plain);
      auto ref = student.critics[i].net.attach(g);
      NodeId qs = student.critics[i].net.forward(g, ref, sa);
      NodeId mse = g.mean(g.square(g.sub(qs, g.constant(std::move(qt)))));
      total += g.scalar_value(mse);
      if (update) {
        g.backward(mse);
        opt[static_cast<std::size_t>(i)].apply(
            params[static_cast<std::size_t>(i)], Mlp::grads(g, ref));
      }
    }
    return 0.5 * total;
  };

  DistillResult res;
  for (int step = 0; step < cfg.steps; ++step) {
    Batch b = sample_states(buffer, cfg, teacher_actor, rng);
    const double mse = mse_pair(b, true);
    if (!std::isfinite(mse))
      fail("distill_critic: non-finite MSE at step ", step);
    if (step == 0) res.initial = mse;
  }
  Batch b = sample_states(buffer, cfg, teacher_actor, rng);
  res.final = mse_pair(b, false);
  return res;
}

void hardcopy(SacAgent& student, const SacAgent& teacher) {
  if (&student == &teacher) return;
  check(student.policy.trunk.same_architecture(teacher.policy.trunk),
        "hardcopy: policy architecture mismatch");
  for (int i = 0; i < 2; ++i) {
    check(student.critics[i].net.same_architecture(teacher.critics[i].net),
          "hardcopy: critic architecture mismatch");
  }
  student.policy.trunk.weights = teacher.policy.trunk.weights;
  student.policy.trunk.biases = teacher.policy.trunk.biases;
  for (int i = 0; i < 2; ++i) {
    student.critics[i].net.weights = teacher.critics[i].net.weights;
    student.critics[i].net.biases = teacher.critics[i].net.biases;
    student.critics[i].target.weights = teacher.critics[i].target.weights;
    student.critics[i].target.biases = teacher.critics[i].target.biases;
  }
  student.policy_opt.reset();
  student.critic_opt[0].reset();
  student.critic_opt[1].reset();
}

PhaseReport distill_phase(std::vector<Member>& members,
                          const ReplayBuffer& buffer,
                          const DistillConfig& cfg, Rng& rng) {
  check(cfg.mode != DistillMode::None, "distill_phase: mode is none");
  PhaseReport rep;
  rep.kind = to_string(cfg.mode);
  rep.teacher = elect_teacher(members, cfg.rule, rng);

  std::vector<int> students;
  std::vector<Rng> streams;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (static_cast<int>(k) == rep.teacher) continue;
    students.push_back(static_cast<int>(k));
    streams.emplace_back(rng.fork());
  }
  rep.students.resize(students.size());

  const SacAgent& teacher = members[static_cast<std::size_t>(rep.teacher)].agent;
  const int n = static_cast<int>(students.size());
  const int nt = std::min(par::effective_threads(), std::max(1, n));
  std::exception_ptr first_error;

#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int i = 0; i < n; ++i) {
    try {
      SacAgent& student =
          members[static_cast<std::size_t>(students[i])].agent;
      StudentReport& sr = rep.students[static_cast<std::size_t>(i)];
      sr.index = students[i];
      if (cfg.mode == DistillMode::Hardcopy) {
        hardcopy(student, teacher);
      } else {
        auto pr = distill_policy(student, teacher, buffer, cfg, rep.teacher,
                                 streams[static_cast<std::size_t>(i)]);
        auto cr = distill_critic(student, teacher, buffer, cfg, rep.teacher,
                                 streams[static_cast<std::size_t>(i)]);
        sr.kl_initial = pr.initial;
        sr.kl_final = pr.final;
        sr.mse_initial = cr.initial;
        sr.mse_final = cr.final;
      }
      if (cfg.share_temperature)
        student.temperature.log_alpha = teacher.temperature.log_alpha;
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  if (cfg.mode == DistillMode::Distill)
    rep.update_steps = static_cast<long>(n) * cfg.steps;
  return rep;
}

}  // namespace piekd
