#pragma once

#include <deque>
#include <limits>

#include "piekd/rng.hpp"
#include "piekd/sac.hpp"

namespace piekd {

// Ring of the most recent episodic returns for one member. R_k is the exact
// arithmetic mean of the stored returns; empty windows report -inf so the
// member is ineligible for teachership.
class ReturnWindow {
public:
  explicit ReturnWindow(int cap = 10) : cap_(cap) {}

  void push(double episodic_return) {
    if (static_cast<int>(returns_.size()) == cap_) returns_.pop_front();
    returns_.push_back(episodic_return);
  }

  bool empty() const { return returns_.empty(); }
  std::size_t count() const { return returns_.size(); }
  int capacity() const { return cap_; }

  double mean() const {
    if (returns_.empty()) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double r : returns_) s += r;
    return s / static_cast<double>(returns_.size());
  }

  const std::deque<double>& values() const { return returns_; }

private:
  int cap_;
  std::deque<double> returns_;
};

// One ensemble slot: learner bundle, recent-return stats, and the member's
// private noise stream for update steps (kept per member so parallel updates
// stay deterministic).
struct Member {
  int index = 0;
  SacAgent agent;
  ReturnWindow window;
  Rng update_rng{0};
};

}  // namespace piekd
