#include "piekd/replay.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "piekd/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "buffer dump format assumes a little-endian host");

namespace piekd {

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::size_t capacity)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      row_width_(static_cast<std::size_t>(2 * state_dim + action_dim + 2)),
      capacity_(capacity) {
  check(state_dim >= 1 && action_dim >= 1, "replay: dims must be positive");
  check(capacity >= 1, "replay: capacity must be positive");
  rows_.resize(capacity_ * row_width_);
  actors_.resize(capacity_, -1);
}

void ReplayBuffer::append(const Transition& t, int actor) {
  check(t.state.size() == state_dim_ && t.next_state.size() == state_dim_,
        "replay: state width ", t.state.size(), " does not match ",
        state_dim_);
  check(t.action.size() == action_dim_, "replay: action width ",
        t.action.size(), " does not match ", action_dim_);
  check(std::isfinite(t.reward), "replay: non-finite reward");
  t.state.assert_finite("replay_append");
  t.action.assert_finite("replay_append");
  t.next_state.assert_finite("replay_append");

  double* r = rows_.data() + cursor_ * row_width_;
  std::memcpy(r, t.state.data(), sizeof(double) * state_dim_);
  r += state_dim_;
  std::memcpy(r, t.action.data(), sizeof(double) * action_dim_);
  r += action_dim_;
  *r++ = t.reward;
  std::memcpy(r, t.next_state.data(), sizeof(double) * state_dim_);
  r += state_dim_;
  *r = t.done ? 1.0 : 0.0;

  actors_[cursor_] = actor;
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

void ReplayBuffer::append(const Trajectory& traj, int actor) {
  for (const Transition& t : traj.steps) append(t, actor);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n,
                                                      Rng& rng) const {
  check(size_ >= 1, "replay: cannot sample from an empty buffer");
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rng.uniform_index(size_);
  return out;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const auto n = static_cast<std::int64_t>(indices.size());
  Batch b{Tensor({n, state_dim_}), Tensor({n, action_dim_}), Tensor({n, 1}),
          Tensor({n, state_dim_}), Tensor({n, 1})};
  for (std::int64_t i = 0; i < n; ++i) {
    check(indices[i] < size_, "replay: index ", indices[i], " out of range");
    const double* r = row(slot(indices[i]));
    std::memcpy(b.states.data() + i * state_dim_, r,
                sizeof(double) * state_dim_);
    r += state_dim_;
    std::memcpy(b.actions.data() + i * action_dim_, r,
                sizeof(double) * action_dim_);
    r += action_dim_;
    b.rewards(i, 0) = *r++;
    std::memcpy(b.next_states.data() + i * state_dim_, r,
                sizeof(double) * state_dim_);
    r += state_dim_;
    b.dones(i, 0) = *r;
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const auto idx = sample_indices(n, rng);
  return gather(idx);
}

Batch ReplayBuffer::sample_from_actor(int actor, std::size_t n,
                                      Rng& rng) const {
  std::vector<std::size_t> pool;
  pool.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i)
    if (actors_[slot(i)] == actor) pool.push_back(i);
  if (pool.empty()) return sample(n, rng);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = pool[rng.uniform_index(pool.size())];
  return gather(idx);
}

Transition ReplayBuffer::get(std::size_t i) const {
  check(i < size_, "replay: index ", i, " out of range (size ", size_, ")");
  const double* r = row(slot(i));
  Transition t;
  t.state = Tensor({1, state_dim_},
                   std::vector<double>(r, r + state_dim_));
  r += state_dim_;
  t.action = Tensor({1, action_dim_},
                    std::vector<double>(r, r + action_dim_));
  r += action_dim_;
  t.reward = *r++;
  t.next_state = Tensor({1, state_dim_},
                        std::vector<double>(r, r + state_dim_));
  r += state_dim_;
  t.done = *r != 0.0;
  return t;
}

int ReplayBuffer::actor_of(std::size_t i) const {
  check(i < size_, "replay: index ", i, " out of range");
  return actors_[slot(i)];
}

namespace {
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  check(static_cast<bool>(is), "replay load: truncated header");
  return v;
}
}  // namespace

void ReplayBuffer::dump(std::ostream& os) const {
  write_u64(os, static_cast<std::uint64_t>(state_dim_));
  write_u64(os, static_cast<std::uint64_t>(action_dim_));
  write_u64(os, size_);
  for (std::size_t i = 0; i < size_; ++i) {
    os.write(reinterpret_cast<const char*>(row(slot(i))),
             static_cast<std::streamsize>(row_width_ * sizeof(double)));
  }
  check(static_cast<bool>(os), "replay dump: write failed");
}

ReplayBuffer ReplayBuffer::load(std::istream& is, std::size_t capacity) {
  const auto ds = static_cast<int>(read_u64(is));
  const auto da = static_cast<int>(read_u64(is));
  const std::size_t count = read_u64(is);
  ReplayBuffer buf(ds, da, capacity == 0 ? std::max<std::size_t>(count, 1)
                                         : capacity);
  const std::size_t w = buf.row_width_;
  std::vector<double> r(w);
  for (std::size_t i = 0; i < count; ++i) {
    is.read(reinterpret_cast<char*>(r.data()),
            static_cast<std::streamsize>(w * sizeof(double)));
    check(static_cast<bool>(is), "replay load: truncated row ", i);
    Transition t;
    t.state = Tensor({1, ds}, std::vector<double>(r.begin(), r.begin() + ds));
    t.action = Tensor({1, da},
                      std::vector<double>(r.begin() + ds, r.begin() + ds + da));
    t.reward = r[static_cast<std::size_t>(ds + da)];
    t.next_state =
        Tensor({1, ds}, std::vector<double>(r.begin() + ds + da + 1,
                                            r.begin() + 2 * ds + da + 1));
    t.done = r[w - 1] != 0.0;
    buf.append(t, -1);
  }
  return buf;
}

}  // namespace piekd
