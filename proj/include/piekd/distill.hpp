#pragma once

#include <string>
#include <vector>

#include "piekd/member.hpp"
#include "piekd/replay.hpp"

namespace piekd {

enum class DistillMode { None, Distill, Hardcopy };
enum class TeacherRule { Best, Random };
enum class DistillSource { All, Teacher };  // which buffer rows to sample

struct DistillConfig {
  DistillMode mode = DistillMode::Distill;
  TeacherRule rule = TeacherRule::Best;
  DistillSource source = DistillSource::All;
  int steps = 200;       // gradient steps per student per phase
  std::int64_t batch_size = 128;
  double learning_rate = 3e-4;
  bool share_temperature = false;  // copy teacher log-alpha to students
};

const char* to_string(DistillMode m);
const char* to_string(TeacherRule r);
const char* to_string(DistillSource s);

// Best: argmax of R_k over members with nonempty windows, ties to the lowest
// index; errors if every window is empty. Random: uniform over all members.
int elect_teacher(const std::vector<Member>& members, TeacherRule rule,
                  Rng& rng);

struct DistillResult {
  double initial = 0.0;  // objective on the first batch, before any step
  double final = 0.0;    // objective on a fresh batch after the last step
};

// Mean closed-form KL(teacher || student) over a batch of states, computed
// between the pre-squash diagonal Gaussians (equal to the KL of the squashed
// action distributions). When grads_out is nonnull it receives the student
// policy gradients in params() order.
double policy_kl(const SacAgent& student, const SacAgent& teacher,
                 const Tensor& states,
                 std::vector<Tensor>* grads_out = nullptr);

// Minimizes the forward KL from teacher to student policy over states
// sampled uniformly from the buffer, with a fresh Adam state (zero moments).
// The KL is the closed form between the pre-squash diagonal Gaussians, which
// equals the KL of the squashed action distributions. Teacher untouched.
DistillResult distill_policy(SacAgent& student, const SacAgent& teacher,
                             const ReplayBuffer& buffer,
                             const DistillConfig& cfg, int teacher_actor,
                             Rng& rng);

// Regresses each student critic onto the teacher's corresponding critic over
// (s, a) pairs from the buffer; the reported value is the MSE averaged over
// the twin critics. Student target critics are left untouched.
DistillResult distill_critic(SacAgent& student, const SacAgent& teacher,
                             const ReplayBuffer& buffer,
                             const DistillConfig& cfg, int teacher_actor,
                             Rng& rng);

// Copies policy, both critics, and both target critics bitwise; resets the
// student's policy and critic optimizer states. Temperature stays the
// student's own. Copying an agent onto itself is a no-op.
void hardcopy(SacAgent& student, const SacAgent& teacher);

struct StudentReport {
  int index = 0;
  double kl_initial = 0.0;
  double kl_final = 0.0;
  double mse_initial = 0.0;
  double mse_final = 0.0;
};

struct PhaseReport {
  std::string kind = "none";  // "distill" | "hardcopy" | "extra" | "none"
  int teacher = -1;
  std::vector<StudentReport> students;
  long update_steps = 0;               // gradient steps this phase performed
  std::vector<long> extra_per_member;  // only for kind == "extra"
};

// Elects a teacher and distills (or hardcopies) into every other member.
// K=1 yields an empty student list.
PhaseReport distill_phase(std::vector<Member>& members,
                          const ReplayBuffer& buffer,
                          const DistillConfig& cfg, Rng& rng);

}  // namespace piekd
