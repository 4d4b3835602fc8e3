#include <doctest.h>

#include <cmath>

#include "piekd/ensemble.hpp"
#include "piekd/par.hpp"

#include "helpers.hpp"

using namespace piekd;

namespace {

TrainerConfig tiny_config(const std::string& arm = "piekd") {
  TrainerConfig cfg;
  cfg.arm = arm;
  cfg.env_id = "pendulum";
  cfg.ensemble_size = 3;
  cfg.total_timesteps = 4000;
  cfg.distill_interval = 1000;
  cfg.sac.hidden = {8};
  cfg.sac.batch_size = 8;
  cfg.distill.steps = 10;
  cfg.distill.batch_size = 8;
  cfg.eval_interval = 1000;
  cfg.eval_episodes = 2;
  cfg.apply_arm();
  return cfg;
}

std::vector<Tensor> policy_snapshot(const Member& m) {
  std::vector<Tensor> out;
  for (const auto* t : m.agent.policy.trunk.params()) out.push_back(*t);
  return out;
}

bool snapshot_equal(const Member& m, const std::vector<Tensor>& snap) {
  auto ps = m.agent.policy.trunk.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (!ps[i]->bitwise_equal(snap[i])) return false;
  return true;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("init: distinct member parameters, deterministic in the seed") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState a = init_ensemble(cfg, env->spec());
  EnsembleState b = init_ensemble(cfg, env->spec());
  REQUIRE(a.members.size() == 3);
  CHECK(a.t_acc == 0);
  CHECK(a.buffer.size() == 0);
  for (int k = 0; k < 3; ++k) {
    CHECK(a.members[k].window.empty());
    CHECK(snapshot_equal(b.members[k], policy_snapshot(a.members[k])));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      CHECK_FALSE(
          snapshot_equal(a.members[i], policy_snapshot(a.members[j])));
}

TEST_CASE("init: K=1 degenerates cleanly") {
  auto cfg = tiny_config("vanilla");
  CHECK(cfg.members == 1);
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  CHECK(st.members.size() == 1);
}

TEST_CASE("policy selection uniformity and determinism") {
  Rng r1(314), r2(314);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    int a = select_policy(3, r1);
    CHECK(a == select_policy(3, r2));
    ++counts[a];
  }
  for (int c : counts) {
    const double f = static_cast<double>(c) / n;
    CHECK(f >= 0.31);
    CHECK(f <= 0.36);
  }
  Rng r3(1);
  for (int i = 0; i < 10; ++i) CHECK(select_policy(1, r3) == 0);
}

TEST_CASE("return window statistics") {
  Member m;
  m.window = ReturnWindow(10);
  CHECK(m.window.mean() == -std::numeric_limits<double>::infinity());
  for (int i = 1; i <= 10; ++i) update_stat(m, i);
  CHECK(m.window.mean() == doctest::Approx(5.5));
  update_stat(m, 11);
  CHECK(m.window.count() == 10);
  CHECK(m.window.mean() == doctest::Approx(6.5));
}

TEST_CASE("joint training round bookkeeping") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  std::vector<std::vector<Tensor>> before;
  for (const auto& m : st.members) before.push_back(policy_snapshot(m));

  Rng rng(derive_seed(cfg.seed, 1));
  RoundReport rep = joint_training_round(st, *env, rng, cfg);

  CHECK(st.buffer.size() == 200);
  CHECK(st.t_acc == 200);
  CHECK(st.total_steps == 200);
  CHECK(st.episodes == 1);
  CHECK(st.rl_update_steps == 3 * 200);
  for (int k = 0; k < 3; ++k) {
    if (k == rep.actor) {
      CHECK(st.members[k].window.count() == 1);
      CHECK(st.members[k].window.mean() ==
            doctest::Approx(rep.episodic_return));
    } else {
      CHECK(st.members[k].window.empty());
    }
    CHECK_FALSE(snapshot_equal(st.members[k], before[k]));
  }
}

TEST_CASE("parallel and serial member updates agree bitwise") {
  auto cfg = tiny_config();
  auto env1 = make_env(cfg.env_id);
  auto env2 = make_env(cfg.env_id);
  EnsembleState a = init_ensemble(cfg, env1->spec());
  EnsembleState b = init_ensemble(cfg, env2->spec());
  Rng r1(derive_seed(cfg.seed, 1)), r2(derive_seed(cfg.seed, 1));
  {
    par::LocalThreadsGuard guard(1);
    joint_training_round(a, *env1, r1, cfg);
  }
  {
    par::LocalThreadsGuard guard(3);
    joint_training_round(b, *env2, r2, cfg);
  }
  for (int k = 0; k < 3; ++k)
    CHECK(snapshot_equal(b.members[k], policy_snapshot(a.members[k])));
}

TEST_CASE("distillation trigger cadence and t_acc reset") {
  auto cfg = tiny_config();  // I = 1000, T = 200 -> every 5 rounds
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng round_rng(derive_seed(cfg.seed, 1));
  Rng distill_rng(derive_seed(cfg.seed, 3));

  int fires = 0;
  for (int round = 1; round <= 20; ++round) {
    joint_training_round(st, *env, round_rng, cfg);
    PhaseReport rep;
    const bool did = maybe_distill(st, cfg, distill_rng, &rep);
    if (did) {
      ++fires;
      CHECK(st.t_acc == 0);
      CHECK(rep.kind == "distill");
      CHECK(rep.students.size() == 2);
      CHECK(round % 5 == 0);
    }
    CHECK(st.t_acc < cfg.distill_interval);
  }
  CHECK(fires == 4);
  CHECK(st.buffer.size() == 20 * 200);

  // one short of the interval is a no-op
  st.t_acc = cfg.distill_interval - 1;
  CHECK_FALSE(maybe_distill(st, cfg, distill_rng, nullptr));
  CHECK(st.t_acc == cfg.distill_interval - 1);
}

}  // TEST_SUITE

TEST_SUITE("distill") {

TEST_CASE("teacher election: argmax, ties to lowest index, empty error") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(0);

  CHECK_THROWS_AS(elect_teacher(st.members, TeacherRule::Best, rng), Error);

  update_stat(st.members[0], 3.0);
  update_stat(st.members[1], 7.0);
  update_stat(st.members[2], 5.0);
  CHECK(elect_teacher(st.members, TeacherRule::Best, rng) == 1);

  EnsembleState st2 = init_ensemble(cfg, env->spec());
  update_stat(st2.members[0], 7.0);
  update_stat(st2.members[1], 7.0);
  update_stat(st2.members[2], 5.0);
  CHECK(elect_teacher(st2.members, TeacherRule::Best, rng) == 0);

  // members with empty windows are ineligible
  EnsembleState st3 = init_ensemble(cfg, env->spec());
  update_stat(st3.members[2], -100.0);
  CHECK(elect_teacher(st3.members, TeacherRule::Best, rng) == 2);
}

TEST_CASE("random teacher rule is uniform") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(555);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i)
    ++counts[elect_teacher(st.members, TeacherRule::Random, rng)];
  for (int c : counts) {
    const double f = static_cast<double>(c) / n;
    CHECK(f >= 0.31);
    CHECK(f <= 0.36);
  }
}

TEST_CASE("graph KL equals the closed form and the 1-dim hand value") {
  // teacher N(0,1), student N(1,1): KL = 0.5
  const double kl = piekd::testing::diag_gauss_kl({0.0}, {0.0}, {1.0}, {0.0});
  CHECK(kl == doctest::Approx(0.5).epsilon(1e-12));

  // Monte Carlo cross-check with 1e6 samples
  Rng rng(42);
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();           // z ~ p = N(0,1)
    const double lp = -0.5 * z * z;          // up to the shared constant
    const double zq = z - 1.0;
    const double lq = -0.5 * zq * zq;
    acc += lp - lq;
  }
  CHECK(std::fabs(acc / n - 0.5) < 0.005);
}

TEST_CASE("self-distillation: zero KL, vanishing gradients, no movement") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(derive_seed(cfg.seed, 1));
  joint_training_round(st, *env, rng, cfg);

  SacAgent& a = st.members[0].agent;
  SacAgent clone = a;  // identical parameters
  auto before = policy_snapshot(st.members[0]);
  Rng drng(9);
  DistillResult res =
      distill_policy(a, clone, st.buffer, cfg.distill, 0, drng);
  CHECK(res.initial == 0.0);
  CHECK(res.final == 0.0);
  CHECK(snapshot_equal(st.members[0], before));
}

TEST_CASE("policy and critic distillation reduce their objectives") {
  auto cfg = tiny_config();
  cfg.distill.steps = 200;
  cfg.distill.batch_size = 32;
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(derive_seed(cfg.seed, 1));
  joint_training_round(st, *env, rng, cfg);

  const SacAgent& teacher = st.members[1].agent;
  auto teacher_params = policy_snapshot(st.members[1]);
  SacAgent& student = st.members[0].agent;

  Rng drng(10);
  DistillResult pr =
      distill_policy(student, teacher, st.buffer, cfg.distill, 1, drng);
  CHECK(pr.initial > 0.0);
  CHECK(pr.final < pr.initial);

  DistillResult cr =
      distill_critic(student, teacher, st.buffer, cfg.distill, 1, drng);
  CHECK(cr.initial > 0.0);
  CHECK(cr.final < cr.initial);

  // teacher parameters bitwise invariant
  CHECK(snapshot_equal(st.members[1], teacher_params));
  // student target critics untouched by distillation
  // (they were equal to the online nets at init and the online nets moved)
  CHECK_FALSE(student.critics[0].net.params()[0]->bitwise_equal(
      *student.critics[0].target.params()[0]));
}

TEST_CASE("a single small gradient step never increases the batch KL") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(derive_seed(cfg.seed, 1));
  joint_training_round(st, *env, rng, cfg);

  Rng drng(11);
  Batch b = st.buffer.sample(64, drng);
  SacAgent& student = st.members[0].agent;
  const SacAgent& teacher = st.members[2].agent;
  auto [mu_t, ls_t] = teacher.policy.dist(b.states);

  // the implementation's KL agrees with an independent closed form
  auto closed_form_kl = [&]() {
    auto [mu_s, ls_s] = student.policy.dist(b.states);
    double total = 0.0;
    for (std::int64_t r = 0; r < mu_s.rows(); ++r) {
      std::vector<double> mp, lp, mq, lq;
      for (std::int64_t c = 0; c < mu_s.cols(); ++c) {
        mp.push_back(mu_t(r, c));
        lp.push_back(ls_t(r, c));
        mq.push_back(mu_s(r, c));
        lq.push_back(ls_s(r, c));
      }
      total += piekd::testing::diag_gauss_kl(mp, lp, mq, lq);
    }
    return total / static_cast<double>(mu_s.rows());
  };

  std::vector<Tensor> grads;
  const double kl_before = policy_kl(student, teacher, b.states, &grads);
  CHECK(kl_before == doctest::Approx(closed_form_kl()).epsilon(1e-12));

  // plain gradient-descent step with a tiny rate
  const double eta = 1e-6;
  auto params = student.policy.trunk.params();
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::int64_t j = 0; j < params[i]->size(); ++j)
      params[i]->at(j) -= eta * grads[i].at(j);

  CHECK(policy_kl(student, teacher, b.states) <= kl_before + 1e-8);
  CHECK(closed_form_kl() <= kl_before + 1e-8);
}

TEST_CASE("hardcopy semantics") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(derive_seed(cfg.seed, 1));
  joint_training_round(st, *env, rng, cfg);

  SacAgent& student = st.members[0].agent;
  const SacAgent& teacher = st.members[1].agent;
  CHECK(student.policy_opt.step_count > 0);

  hardcopy(student, teacher);

  auto sp = student.policy.trunk.params();
  auto tp = teacher.policy.trunk.params();
  for (std::size_t i = 0; i < sp.size(); ++i)
    CHECK(sp[i]->bitwise_equal(*tp[i]));
  for (int c = 0; c < 2; ++c) {
    auto sn = student.critics[c].net.params();
    auto tn = teacher.critics[c].net.params();
    auto stg = student.critics[c].target.params();
    auto ttg = teacher.critics[c].target.params();
    for (std::size_t i = 0; i < sn.size(); ++i) {
      CHECK(sn[i]->bitwise_equal(*tn[i]));
      CHECK(stg[i]->bitwise_equal(*ttg[i]));
    }
  }
  CHECK(student.policy_opt.step_count == 0);
  for (const auto& t : student.policy_opt.m)
    for (std::int64_t j = 0; j < t.size(); ++j) CHECK(t.at(j) == 0.0);

  Rng probe(3);
  for (int i = 0; i < 100; ++i) {
    Tensor s = piekd::testing::random_tensor({1, 3}, probe);
    CHECK(student.policy.act(s, nullptr, true)
              .bitwise_equal(teacher.policy.act(s, nullptr, true)));
  }

  // self-copy is a no-op
  auto before = policy_snapshot(st.members[0]);
  hardcopy(student, student);
  CHECK(snapshot_equal(st.members[0], before));
}

TEST_CASE("hardcopy rejects architecture mismatch") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  SacConfig other = cfg.sac;
  other.hidden = {12};
  SacAgent a = SacAgent::make(env->spec(), cfg.sac, 1);
  SacAgent b = SacAgent::make(env->spec(), other, 2);
  CHECK_THROWS_AS(hardcopy(a, b), Error);
}

TEST_CASE("distill_phase: student set and K=1 no-op") {
  auto cfg = tiny_config();
  auto env = make_env(cfg.env_id);
  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng rng(derive_seed(cfg.seed, 1));
  joint_training_round(st, *env, rng, cfg);

  Rng drng(12);
  PhaseReport rep = distill_phase(st.members, st.buffer, cfg.distill, drng);
  CHECK(rep.students.size() == 2);
  for (const auto& s : rep.students) CHECK(s.index != rep.teacher);
  CHECK(rep.update_steps == 2 * cfg.distill.steps);

  // K = 1
  auto vcfg = tiny_config("vanilla");
  vcfg.distill.mode = DistillMode::Distill;
  auto env2 = make_env(vcfg.env_id);
  EnsembleState solo = init_ensemble(vcfg, env2->spec());
  Rng rng2(derive_seed(vcfg.seed, 1));
  joint_training_round(solo, *env2, rng2, vcfg);
  PhaseReport rep2 =
      distill_phase(solo.members, solo.buffer, vcfg.distill, drng);
  CHECK(rep2.students.empty());
  CHECK(rep2.teacher == 0);
}

}  // TEST_SUITE
