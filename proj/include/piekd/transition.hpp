#pragma once

#include <vector>

#include "piekd/tensor.hpp"

namespace piekd {

// One (s, a, r, s', done) tuple, the unit stored in the shared replay buffer.
struct Transition {
  Tensor state;       // [1, state_dim]
  Tensor action;      // [1, action_dim]
  double reward = 0.0;
  Tensor next_state;  // [1, state_dim]
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;
  double episodic_return = 0.0;
};

}  // namespace piekd
