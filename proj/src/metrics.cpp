#include "piekd/metrics.hpp"

#include <json.hpp>

namespace piekd {

using nlohmann::json;

MetricsWriter::MetricsWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary) {
  check(static_cast<bool>(out_), "metrics: cannot open ", path.string());
}

void MetricsWriter::header(const TrainerConfig& cfg) {
  json j = json::parse(cfg.to_json_text(/*include_arm=*/false));
  j["schema"] = "piekd.metrics.v1";
  out_ << j.dump() << "\n";
}

void MetricsWriter::round(const EnsembleState& st, const RoundReport& rep) {
  json j;
  j["type"] = "round";
  j["episode"] = st.episodes;
  j["step"] = st.total_steps;
  j["actor"] = rep.actor;
  j["return"] = rep.episodic_return;
  json r = json::array();
  for (const Member& m : st.members)
    r.push_back(m.window.empty() ? json(nullptr) : json(m.window.mean()));
  j["r_k"] = std::move(r);
  j["critic_loss"] = rep.critic_loss;
  j["policy_loss"] = rep.policy_loss;
  j["alpha"] = rep.alpha;
  out_ << j.dump() << "\n";
}

void MetricsWriter::phase(const EnsembleState& st, const PhaseReport& rep) {
  json j;
  j["type"] = "phase";
  j["step"] = st.total_steps;
  j["kind"] = rep.kind;
  j["update_steps"] = rep.update_steps;
  if (rep.kind == "extra") {
    j["extra_per_member"] = rep.extra_per_member;
  } else {
    j["teacher"] = rep.teacher;
    json students = json::array();
    for (const StudentReport& s : rep.students) {
      json e;
      e["k"] = s.index;
      if (rep.kind == "distill") {
        e["kl_initial"] = s.kl_initial;
        e["kl_final"] = s.kl_final;
        e["mse_initial"] = s.mse_initial;
        e["mse_final"] = s.mse_final;
      }
      students.push_back(std::move(e));
    }
    j["students"] = std::move(students);
  }
  out_ << j.dump() << "\n";
}

void MetricsWriter::eval(const EvalRecord& rec) {
  json j;
  j["type"] = "eval";
  j["step"] = rec.step;
  j["member_mean"] = rec.member_mean;
  j["best"] = rec.best;
  j["worst"] = rec.worst;
  out_ << j.dump() << "\n";
}

void MetricsWriter::close() {
  if (out_.is_open()) {
    out_.flush();
    out_.close();
  }
}

}  // namespace piekd
