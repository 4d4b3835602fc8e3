#include "piekd/env.hpp"

#include <cmath>

#include "piekd/error.hpp"

namespace piekd {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ((x + pi) mod 2pi) - pi
double normalize_angle(double x) {
  double y = std::fmod(x + kPi, 2.0 * kPi);
  if (y < 0) y += 2.0 * kPi;
  return y - kPi;
}

double clip(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Pendulum swing-up: state (theta, theta_dot), obs (cos, sin, theta_dot),
// torque in [-2, 2]. dt=0.05, g=10, m=1, l=1, speed clipped to [-8, 8].
// Cost uses the pre-step state: theta_norm^2 + 0.1 theta_dot^2 + 0.001 a^2.
// ---------------------------------------------------------------------------

PendulumEnv::PendulumEnv() {
  spec_.state_dim = 3;
  spec_.action_dim = 1;
  spec_.action_low = {-2.0};
  spec_.action_high = {2.0};
  spec_.episode_length = 200;
  spec_.discount = 0.99;
}

Tensor PendulumEnv::observe() const {
  return Tensor({1, 3}, {std::cos(theta_), std::sin(theta_), theta_dot_});
}

Tensor PendulumEnv::reset(Rng& rng) {
  theta_ = rng.uniform(-kPi, kPi);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  step_count_ = 0;
  episode_done_ = false;
  return observe();
}

void PendulumEnv::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  step_count_ = 0;
  episode_done_ = false;
}

StepResult PendulumEnv::step(const Tensor& action) {
  check(!episode_done_, "pendulum: step after episode end without reset");
  const double a = clip(action(0, 0), -2.0, 2.0);
  const double th_n = normalize_angle(theta_);
  const double reward =
      -(th_n * th_n + 0.1 * theta_dot_ * theta_dot_ + 0.001 * a * a);

  constexpr double dt = 0.05, g = 10.0, m = 1.0, l = 1.0;
  theta_dot_ += (3.0 * g / (2.0 * l) * std::sin(theta_) +
                 3.0 / (m * l * l) * a) *
                dt;
  theta_dot_ = clip(theta_dot_, -8.0, 8.0);
  theta_ += theta_dot_ * dt;

  ++step_count_;
  episode_done_ = step_count_ >= spec_.episode_length;
  return {observe(), reward, episode_done_};
}

// ---------------------------------------------------------------------------
// Continuous mountain car: obs (position, velocity), force in [-1, 1].
// Sparse +100 awarded once per episode on first reaching the goal position;
// every step costs 0.1 a^2. No early termination: the episode always runs T.
// ---------------------------------------------------------------------------

MountainCarEnv::MountainCarEnv() {
  spec_.state_dim = 2;
  spec_.action_dim = 1;
  spec_.action_low = {-1.0};
  spec_.action_high = {1.0};
  spec_.episode_length = 999;
  spec_.discount = 0.99;
}

Tensor MountainCarEnv::observe() const {
  return Tensor({1, 2}, {position_, velocity_});
}

Tensor MountainCarEnv::reset(Rng& rng) {
  position_ = rng.uniform(-0.6, -0.4);
  velocity_ = 0.0;
  goal_rewarded_ = false;
  step_count_ = 0;
  episode_done_ = false;
  return observe();
}

StepResult MountainCarEnv::step(const Tensor& action) {
  check(!episode_done_, "mountaincar: step after episode end without reset");
  const double a = clip(action(0, 0), -1.0, 1.0);

  velocity_ += a * 0.0015 - 0.0025 * std::cos(3.0 * position_);
  velocity_ = clip(velocity_, -0.07, 0.07);
  position_ += velocity_;
  if (position_ < -1.2) {
    position_ = -1.2;
    velocity_ = std::max(velocity_, 0.0);
  }
  position_ = std::min(position_, 0.6);

  double reward = -0.1 * a * a;
  if (!goal_rewarded_ && position_ >= 0.45) {
    reward += 100.0;
    goal_rewarded_ = true;
  }

  ++step_count_;
  episode_done_ = step_count_ >= spec_.episode_length;
  return {observe(), reward, episode_done_};
}

// ---------------------------------------------------------------------------
// Point-mass reach: obs (px, py, vx, vy), force in [-1, 1]^2, goal at the
// origin, reward -||pos||. Spawn uniform in the disk of radius kSpawnRadius,
// zero initial velocity. dt=0.1, velocity and position kept in bounds.
// ---------------------------------------------------------------------------

PointMassEnv::PointMassEnv() {
  spec_.state_dim = 4;
  spec_.action_dim = 2;
  spec_.action_low = {-1.0, -1.0};
  spec_.action_high = {1.0, 1.0};
  spec_.episode_length = 150;
  spec_.discount = 0.99;
}

Tensor PointMassEnv::observe() const {
  return Tensor({1, 4}, {pos_[0], pos_[1], vel_[0], vel_[1]});
}

Tensor PointMassEnv::reset(Rng& rng) {
  const double ang = rng.uniform(0.0, 2.0 * kPi);
  const double rad = kSpawnRadius * std::sqrt(rng.uniform01());
  pos_[0] = rad * std::cos(ang);
  pos_[1] = rad * std::sin(ang);
  vel_[0] = vel_[1] = 0.0;
  step_count_ = 0;
  episode_done_ = false;
  return observe();
}

StepResult PointMassEnv::step(const Tensor& action) {
  check(!episode_done_, "pointmass: step after episode end without reset");
  constexpr double dt = 0.1;
  for (int i = 0; i < 2; ++i) {
    const double a = clip(action(0, i), -1.0, 1.0);
    vel_[i] = clip(vel_[i] + a * dt, -2.0, 2.0);
    pos_[i] = clip(pos_[i] + vel_[i] * dt, -4.0, 4.0);
  }
  const double reward = -std::sqrt(pos_[0] * pos_[0] + pos_[1] * pos_[1]);
  ++step_count_;
  episode_done_ = step_count_ >= spec_.episode_length;
  return {observe(), reward, episode_done_};
}

// ---------------------------------------------------------------------------

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "pendulum") return std::make_unique<PendulumEnv>();
  if (id == "mountaincar") return std::make_unique<MountainCarEnv>();
  if (id == "pointmass") return std::make_unique<PointMassEnv>();
  fail("unknown env id \"", id, "\"; valid: pendulum, mountaincar, pointmass");
}

const std::vector<std::string>& env_ids() {
  static const std::vector<std::string> ids{"pendulum", "mountaincar",
                                            "pointmass"};
  return ids;
}

Trajectory rollout(Env& env, const ActionFn& act, Rng& rng) {
  Trajectory traj;
  const int T = env.spec().episode_length;
  traj.steps.reserve(static_cast<std::size_t>(T));
  Tensor state = env.reset(rng);
  for (int t = 0; t < T; ++t) {
    Tensor action = act(state);
    StepResult r = env.step(action);
    traj.episodic_return += r.reward;
    traj.steps.push_back(
        {std::move(state), std::move(action), r.reward, r.next_state, r.done});
    state = std::move(r.next_state);
  }
  return traj;
}

}  // namespace piekd
