#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "piekd/rng.hpp"
#include "piekd/tensor.hpp"
#include "piekd/transition.hpp"

namespace piekd {

struct MdpSpec {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  int episode_length = 0;  // T; episodes terminate here and nowhere else
  double discount = 0.99;
};

struct StepResult {
  Tensor next_state;
  double reward = 0.0;
  bool done = false;
};

// Deterministic closed-form MDP behind a common interface. Dynamics are pure
// functions of (state, action); the only stochastic element is reset().
class Env {
public:
  virtual ~Env() = default;
  const MdpSpec& spec() const { return spec_; }

  virtual Tensor reset(Rng& rng) = 0;
  virtual StepResult step(const Tensor& action) = 0;

protected:
  MdpSpec spec_;
  int step_count_ = 0;
  bool episode_done_ = true;  // step() before the first reset() is an error
};

class PendulumEnv final : public Env {
public:
  PendulumEnv();
  Tensor reset(Rng& rng) override;
  StepResult step(const Tensor& action) override;
  // test hook: place the pendulum at a known state
  void set_state(double theta, double theta_dot);
  std::pair<double, double> state() const { return {theta_, theta_dot_}; }

private:
  Tensor observe() const;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

class MountainCarEnv final : public Env {
public:
  MountainCarEnv();
  Tensor reset(Rng& rng) override;
  StepResult step(const Tensor& action) override;

private:
  Tensor observe() const;
  double position_ = 0.0;
  double velocity_ = 0.0;
  bool goal_rewarded_ = false;
};

class PointMassEnv final : public Env {
public:
  PointMassEnv();
  Tensor reset(Rng& rng) override;
  StepResult step(const Tensor& action) override;
  static constexpr double kSpawnRadius = 1.0;

private:
  Tensor observe() const;
  double pos_[2] = {0, 0};
  double vel_[2] = {0, 0};
};

// id: "pendulum" | "mountaincar" | "pointmass"
std::unique_ptr<Env> make_env(const std::string& id);
const std::vector<std::string>& env_ids();

// Runs one full episode of exactly T steps. The action callable owns any
// policy state and noise stream; rng drives the reset.
using ActionFn = std::function<Tensor(const Tensor& state)>;
Trajectory rollout(Env& env, const ActionFn& act, Rng& rng);

}  // namespace piekd
