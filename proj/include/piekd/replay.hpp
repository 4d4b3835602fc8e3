#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "piekd/rng.hpp"
#include "piekd/tensor.hpp"
#include "piekd/transition.hpp"

namespace piekd {

// Column batch view of sampled transitions, ready for the SAC updates.
struct Batch {
  Tensor states;       // [n, state_dim]
  Tensor actions;      // [n, action_dim]
  Tensor rewards;      // [n, 1]
  Tensor next_states;  // [n, state_dim]
  Tensor dones;        // [n, 1], 0/1
  std::int64_t size() const { return states.rows(); }
};

// The single shared experience buffer. FIFO ring of flat f64 rows
// s | a | r | s' | done, plus the acting member id per row. Single writer,
// any number of concurrent readers; the trainer keeps the phases separate.
class ReplayBuffer {
public:
  ReplayBuffer(int state_dim, int action_dim, std::size_t capacity);
  // placeholder buffer; real ones are sized from the env spec
  ReplayBuffer() : ReplayBuffer(1, 1, 1) {}

  void append(const Transition& t, int actor);
  void append(const Trajectory& traj, int actor);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  // n i.i.d. uniform draws with replacement; empty buffer is an error.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch gather(std::span<const std::size_t> indices) const;
  Batch sample(std::size_t n, Rng& rng) const;

  // Uniform over the rows written by one actor; falls back to the whole
  // buffer when that actor has no stored transitions.
  Batch sample_from_actor(int actor, std::size_t n, Rng& rng) const;

  // i = 0 is the oldest stored transition.
  Transition get(std::size_t i) const;
  int actor_of(std::size_t i) const;

  // Flat binary dump: u64 state_dim, u64 action_dim, u64 count, then
  // little-endian f64 rows s|a|r|s'|done, oldest first. Bit-exact round trip.
  void dump(std::ostream& os) const;
  static ReplayBuffer load(std::istream& is, std::size_t capacity = 0);

private:
  std::size_t slot(std::size_t logical) const {
    return size_ < capacity_ ? logical : (cursor_ + logical) % capacity_;
  }
  const double* row(std::size_t slot_index) const {
    return rows_.data() + slot_index * row_width_;
  }

  int state_dim_;
  int action_dim_;
  std::size_t row_width_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;  // next write slot
  std::vector<double> rows_;
  std::vector<std::int32_t> actors_;
};

}  // namespace piekd
