#include "piekd/checkpoint.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace piekd::checkpoint {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'K', 'C', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  check(static_cast<bool>(is), "checkpoint: truncated stream");
  return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u64(os, static_cast<std::uint64_t>(t.size()));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

void read_tensor(std::istream& is, Tensor& t) {
  const std::uint64_t n = read_u64(is);
  check(n == static_cast<std::uint64_t>(t.size()),
        "checkpoint: tensor size mismatch: stored ", n, ", expected ",
        t.size());
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  check(static_cast<bool>(is), "checkpoint: truncated tensor");
}

void write_mlp(std::ostream& os, const Mlp& m) {
  for (const auto* t : m.params()) write_tensor(os, *t);
}

void read_mlp(std::istream& is, Mlp& m) {
  for (auto* t : m.params()) read_tensor(is, *t);
}

void write_adam(std::ostream& os, const AdamState& st) {
  write_u64(os, static_cast<std::uint64_t>(st.step_count));
  Tensor consts({1, 4}, {st.lr, st.beta1, st.beta2, st.eps});
  write_tensor(os, consts);
  for (const auto& t : st.m) write_tensor(os, t);
  for (const auto& t : st.v) write_tensor(os, t);
}

void read_adam(std::istream& is, AdamState& st) {
  st.step_count = static_cast<std::int64_t>(read_u64(is));
  Tensor consts({1, 4});
  read_tensor(is, consts);
  st.lr = consts.at(0);
  st.beta1 = consts.at(1);
  st.beta2 = consts.at(2);
  st.eps = consts.at(3);
  for (auto& t : st.m) read_tensor(is, t);
  for (auto& t : st.v) read_tensor(is, t);
}

}  // namespace

void save(std::ostream& os, const EnsembleState& st, const std::string& env_id,
          const std::vector<std::int64_t>& hidden, int return_window,
          const BufferMeta& meta) {
  json h;
  h["version"] = 1;
  h["env"] = env_id;
  h["members"] = st.members.size();
  h["hidden_layers"] = hidden;
  h["return_window"] = return_window;
  h["t_acc"] = st.t_acc;
  h["total_steps"] = st.total_steps;
  h["episodes"] = st.episodes;
  h["rl_update_steps"] = st.rl_update_steps;
  h["distill_update_steps"] = st.distill_update_steps;
  h["extra_cursor"] = st.extra_cursor;
  h["buffer_capacity"] = meta.capacity;
  h["buffer_size"] = meta.size;
  h["buffer_cursor"] = meta.cursor;
  const std::string header = h.dump();

  os.write(kMagic, 4);
  write_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));

  for (const Member& m : st.members) {
    write_mlp(os, m.agent.policy.trunk);
    for (int i = 0; i < 2; ++i) {
      write_mlp(os, m.agent.critics[i].net);
      write_mlp(os, m.agent.critics[i].target);
    }
    Tensor temp({1, 2},
                {m.agent.temperature.log_alpha(0, 0),
                 m.agent.temperature.target_entropy});
    write_tensor(os, temp);
    write_adam(os, m.agent.policy_opt);
    write_adam(os, m.agent.critic_opt[0]);
    write_adam(os, m.agent.critic_opt[1]);
    write_adam(os, m.agent.temp_opt);
    write_u64(os, m.window.count());
    for (double r : m.window.values()) {
      Tensor v = Tensor::scalar(r);
      os.write(reinterpret_cast<const char*>(v.data()), sizeof(double));
    }
  }
  check(static_cast<bool>(os), "checkpoint: write failed");
}

void save(const std::filesystem::path& path, const EnsembleState& st,
          const TrainerConfig& cfg) {
  std::ofstream os(path, std::ios::binary);
  check(static_cast<bool>(os), "checkpoint: cannot open ", path.string());
  BufferMeta meta{st.buffer.capacity(), st.buffer.size(), st.buffer.cursor()};
  save(os, st, cfg.env_id, cfg.sac.hidden, cfg.return_window, meta);
}

Loaded load(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  check(static_cast<bool>(is) && std::equal(magic, magic + 4, kMagic),
        "checkpoint: bad magic");
  const std::uint64_t hlen = read_u64(is);
  std::string header(hlen, '\0');
  is.read(header.data(), static_cast<std::streamsize>(hlen));
  check(static_cast<bool>(is), "checkpoint: truncated header");

  json h;
  try {
    h = json::parse(header);
  } catch (const json::exception& e) {
    fail("checkpoint: bad header: ", e.what());
  }
  check(h.at("version").get<int>() == 1, "checkpoint: unsupported version");

  Loaded out;
  out.env_id = h.at("env").get<std::string>();
  out.hidden = h.at("hidden_layers").get<std::vector<std::int64_t>>();
  out.return_window = h.at("return_window").get<int>();
  out.buffer_meta = {h.at("buffer_capacity").get<std::uint64_t>(),
                     h.at("buffer_size").get<std::uint64_t>(),
                     h.at("buffer_cursor").get<std::uint64_t>()};
  const auto members = h.at("members").get<std::size_t>();

  auto env = make_env(out.env_id);
  const MdpSpec& spec = env->spec();
  SacConfig sac;
  sac.hidden = out.hidden;

  EnsembleState st{.members = {},
                   .buffer = ReplayBuffer(spec.state_dim, spec.action_dim,
                                          out.buffer_meta.capacity)};
  st.t_acc = h.at("t_acc").get<long>();
  st.total_steps = h.at("total_steps").get<long>();
  st.episodes = h.at("episodes").get<long>();
  st.rl_update_steps = h.at("rl_update_steps").get<long>();
  st.distill_update_steps = h.at("distill_update_steps").get<long>();
  st.extra_cursor = h.at("extra_cursor").get<long>();

  for (std::size_t k = 0; k < members; ++k) {
    Member m;
    m.index = static_cast<int>(k);
    m.agent = SacAgent::make(spec, sac, /*seed=*/0);
    m.window = ReturnWindow(out.return_window);
    read_mlp(is, m.agent.policy.trunk);
    for (int i = 0; i < 2; ++i) {
      read_mlp(is, m.agent.critics[i].net);
      read_mlp(is, m.agent.critics[i].target);
    }
    Tensor temp({1, 2});
    read_tensor(is, temp);
    m.agent.temperature.log_alpha = Tensor::scalar(temp.at(0));
    m.agent.temperature.target_entropy = temp.at(1);
    read_adam(is, m.agent.policy_opt);
    read_adam(is, m.agent.critic_opt[0]);
    read_adam(is, m.agent.critic_opt[1]);
    read_adam(is, m.agent.temp_opt);
    const std::uint64_t wn = read_u64(is);
    for (std::uint64_t i = 0; i < wn; ++i) {
      double r = 0;
      is.read(reinterpret_cast<char*>(&r), sizeof(double));
      check(static_cast<bool>(is), "checkpoint: truncated window");
      m.window.push(r);
    }
    st.members.push_back(std::move(m));
  }
  out.state = std::move(st);
  return out;
}

Loaded load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  check(static_cast<bool>(is), "checkpoint: cannot open ", path.string());
  return load(is);
}

}  // namespace piekd::checkpoint
