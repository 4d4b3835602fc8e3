#include "piekd/config.hpp"

#include <fstream>

#include <json.hpp>

namespace piekd {

using nlohmann::json;

const std::vector<std::string>& TrainerConfig::arm_names() {
  static const std::vector<std::string> names{
      "vanilla",       "ensemble",       "piekd",        "piekd-hardcopy",
      "piekd-random-teacher", "vanilla-extra", "ensemble-extra"};
  return names;
}

namespace {

DistillMode parse_mode(const std::string& s) {
  if (s == "none") return DistillMode::None;
  if (s == "distill") return DistillMode::Distill;
  if (s == "hardcopy") return DistillMode::Hardcopy;
  fail("config: distill_mode \"", s, "\" not one of none|distill|hardcopy");
}

TeacherRule parse_rule(const std::string& s) {
  if (s == "best") return TeacherRule::Best;
  if (s == "random") return TeacherRule::Random;
  fail("config: teacher_rule \"", s, "\" not one of best|random");
}

DistillSource parse_source(const std::string& s) {
  if (s == "all") return DistillSource::All;
  if (s == "teacher") return DistillSource::Teacher;
  fail("config: distill_sample \"", s, "\" not one of all|teacher");
}

}  // namespace

TrainerConfig TrainerConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), "config: cannot open ", path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

TrainerConfig TrainerConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail("config: invalid JSON: ", e.what());
  }
  check(j.is_object(), "config: top level must be a JSON object");

  TrainerConfig cfg;
  bool mode_pinned = false;
  bool rule_pinned = false;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "arm") cfg.arm = value.get<std::string>();
      else if (key == "env") cfg.env_id = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "total_timesteps") cfg.total_timesteps = value.get<long>();
      else if (key == "ensemble_size") cfg.ensemble_size = value.get<int>();
      else if (key == "distill_interval") cfg.distill_interval = value.get<long>();
      else if (key == "return_window") cfg.return_window = value.get<int>();
      else if (key == "buffer_capacity") cfg.buffer_capacity = value.get<std::size_t>();
      else if (key == "learning_rate") cfg.sac.learning_rate = value.get<double>();
      else if (key == "batch_size") cfg.sac.batch_size = value.get<std::int64_t>();
      else if (key == "discount") cfg.sac.discount = value.get<double>();
      else if (key == "polyak") cfg.sac.polyak = value.get<double>();
      else if (key == "init_alpha") cfg.sac.init_alpha = value.get<double>();
      else if (key == "hidden_layers") cfg.sac.hidden = value.get<std::vector<std::int64_t>>();
      else if (key == "distill_mode") { cfg.distill.mode = parse_mode(value.get<std::string>()); mode_pinned = true; }
      else if (key == "teacher_rule") { cfg.distill.rule = parse_rule(value.get<std::string>()); rule_pinned = true; }
      else if (key == "distill_sample") cfg.distill.source = parse_source(value.get<std::string>());
      else if (key == "distill_steps") cfg.distill.steps = value.get<int>();
      else if (key == "distill_batch_size") cfg.distill.batch_size = value.get<std::int64_t>();
      else if (key == "distill_learning_rate") cfg.distill.learning_rate = value.get<double>();
      else if (key == "share_temperature") cfg.distill.share_temperature = value.get<bool>();
      else if (key == "eval_interval") cfg.eval_interval = value.get<long>();
      else if (key == "eval_episodes") cfg.eval_episodes = value.get<int>();
      else if (key == "threads") cfg.threads = value.get<int>();
      else if (key == "dump_buffer") cfg.dump_buffer = value.get<bool>();
      else fail("config: unknown key \"", key, "\"");
    }
  } catch (const json::exception& e) {
    fail("config: bad value type: ", e.what());
  }
  cfg.pinned.mode = mode_pinned;
  cfg.pinned.rule = rule_pinned;
  return cfg;
}

void TrainerConfig::apply_arm() {
  bool known = false;
  for (const auto& a : arm_names()) known = known || a == arm;
  if (!known) {
    std::string list;
    for (const auto& a : arm_names()) list += (list.empty() ? "" : "|") + a;
    fail("unknown arm \"", arm, "\"; valid arms: ", list);
  }

  const bool extra = arm == "vanilla-extra" || arm == "ensemble-extra";
  members = (arm == "vanilla" || arm == "vanilla-extra") ? 1 : ensemble_size;

  if (arm == "piekd") {
    if (!pinned.mode) distill.mode = DistillMode::Distill;
    if (!pinned.rule) distill.rule = TeacherRule::Best;
  } else if (arm == "piekd-hardcopy") {
    if (!pinned.mode) distill.mode = DistillMode::Hardcopy;
    if (!pinned.rule) distill.rule = TeacherRule::Best;
  } else if (arm == "piekd-random-teacher") {
    if (!pinned.mode) distill.mode = DistillMode::Distill;
    if (!pinned.rule) distill.rule = TeacherRule::Random;
  } else {
    // vanilla / ensemble / extra variants never distill
    check(!pinned.mode || distill.mode == DistillMode::None,
          "config: arm \"", arm, "\" cannot pin distill_mode=",
          to_string(distill.mode));
    distill.mode = DistillMode::None;
  }

  extra_updates_per_phase =
      extra ? static_cast<long>(ensemble_size - 1) * distill.steps : 0;
}

void TrainerConfig::validate() const {
  check(ensemble_size >= 1, "config: ensemble_size must be >= 1");
  check(members >= 1, "config: members must be >= 1");
  check(distill_interval >= 1, "config: distill_interval must be >= 1");
  check(total_timesteps >= distill_interval,
        "config: total_timesteps (", total_timesteps,
        ") must be >= distill_interval (", distill_interval, ")");
  check(return_window >= 1, "config: return_window must be >= 1");
  check(buffer_capacity >= 1, "config: buffer_capacity must be >= 1");
  check(sac.learning_rate > 0, "config: learning_rate must be positive");
  check(sac.batch_size >= 1, "config: batch_size must be >= 1");
  check(sac.discount >= 0.0 && sac.discount <= 1.0,
        "config: discount must be in [0,1]");
  check(sac.polyak > 0.0 && sac.polyak <= 1.0,
        "config: polyak must be in (0,1]");
  check(sac.init_alpha > 0.0, "config: init_alpha must be positive");
  check(!sac.hidden.empty(), "config: hidden_layers must be nonempty");
  for (auto h : sac.hidden)
    check(h >= 1, "config: hidden layer widths must be positive");
  if (distill.mode == DistillMode::Distill)
    check(distill.steps >= 1,
          "config: distill_steps must be >= 1 when distill_mode=distill");
  check(distill.batch_size >= 1, "config: distill_batch_size must be >= 1");
  check(distill.learning_rate > 0,
        "config: distill_learning_rate must be positive");
  check(eval_interval >= 1, "config: eval_interval must be >= 1");
  check(eval_episodes >= 1, "config: eval_episodes must be >= 1");
  bool env_ok = false;
  for (const auto& id : env_ids()) env_ok = env_ok || id == env_id;
  check(env_ok, "config: unknown env \"", env_id, "\"");
}

void TrainerConfig::validate_for(const MdpSpec& spec) const {
  check(eval_interval % spec.episode_length == 0,
        "config: eval_interval (", eval_interval,
        ") must be a multiple of the episode length T (",
        spec.episode_length, ") so evaluation lands on episode boundaries");
}

std::string TrainerConfig::to_json_text(bool include_arm) const {
  json j;
  if (include_arm) j["arm"] = arm;
  j["env"] = env_id;
  j["seed"] = seed;
  j["total_timesteps"] = total_timesteps;
  j["ensemble_size"] = ensemble_size;
  j["members"] = members;
  j["distill_interval"] = distill_interval;
  j["return_window"] = return_window;
  j["buffer_capacity"] = buffer_capacity;
  j["learning_rate"] = sac.learning_rate;
  j["batch_size"] = sac.batch_size;
  j["discount"] = sac.discount;
  j["polyak"] = sac.polyak;
  j["init_alpha"] = sac.init_alpha;
  j["hidden_layers"] = sac.hidden;
  j["distill_mode"] = to_string(distill.mode);
  j["teacher_rule"] = to_string(distill.rule);
  j["distill_sample"] = to_string(distill.source);
  j["distill_steps"] = distill.steps;
  j["distill_batch_size"] = distill.batch_size;
  j["distill_learning_rate"] = distill.learning_rate;
  j["share_temperature"] = distill.share_temperature;
  j["extra_updates_per_phase"] = extra_updates_per_phase;
  j["eval_interval"] = eval_interval;
  j["eval_episodes"] = eval_episodes;
  return j.dump();
}

}  // namespace piekd
