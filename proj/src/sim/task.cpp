#include "diver/sim/task.hpp"

#include <cmath>

#include "diver/util/error.hpp"

namespace diver::sim {

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::Ready: return "READY";
    case TaskState::Pend: return "PEND";
    case TaskState::PendT: return "PEND_T";
    case TaskState::Delay: return "DELAY";
    case TaskState::Suspend: return "SUSPEND";
    case TaskState::Running: return "RUNNING";
  }
  return "?";
}

TaskState parse_task_state(std::string_view text) {
  for (auto s : kAllTaskStates)
    if (to_string(s) == text) return s;
  if (text == "PEND+T") return TaskState::PendT;
  throw Error(ErrorCode::BadArgument, "unknown task state '" + std::string(text) + "'");
}

BehaviorProfile BehaviorProfile::from_ready_bias(double bias, std::vector<Address> pc_walk,
                                                 std::uint64_t seed) {
  BehaviorProfile p;
  p.seed = seed;
  p.ready_bias = bias;
  p.pc_walk = std::move(pc_walk);
  return p;
}

void BehaviorProfile::validate() const {
  if (pc_walk.empty()) throw Error(ErrorCode::BadArgument, "behavior pc_walk is empty");
  if (ready_bias < 0.0 || ready_bias > 1.0)
    throw Error(ErrorCode::BadArgument, "ready_bias outside [0,1]");
  for (const auto& [from, row] : transitions) {
    double sum = 0.0;
    for (const auto& [to, w] : row) {
      if (w < 0.0) throw Error(ErrorCode::BadArgument, "negative transition weight");
      if (to == TaskState::Running)
        throw Error(ErrorCode::BadArgument, "RUNNING is assigned by the scheduler");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorCode::BadArgument,
                  "transition weights from " + std::string(to_string(from)) + " do not sum to 1");
  }
}

const std::map<TaskState, double>* BehaviorProfile::row_for(TaskState s) const {
  if (s == TaskState::Running) s = TaskState::Ready;
  auto it = transitions.find(s);
  return it == transitions.end() ? nullptr : &it->second;
}

double SimTask::next_uniform() {
  rng_state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = rng_state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

void SimTask::step_behavior() {
  if (state == TaskState::Suspend || state == TaskState::Delay || state == TaskState::PendT)
    return;

  TaskState next;
  if (behavior.transitions.empty()) {
    if (state != TaskState::Ready && state != TaskState::Running && state != TaskState::Pend)
      return;
    next = next_uniform() < behavior.ready_bias ? TaskState::Ready : TaskState::Pend;
  } else {
    const auto* row = behavior.row_for(state);
    if (row == nullptr) return;
    double u = next_uniform();
    next = row->rbegin()->first;
    double acc = 0.0;
    for (const auto& [to, w] : *row) {
      acc += w;
      if (u < acc) {
        next = to;
        break;
      }
    }
  }

  state = next;
  if (next == TaskState::Delay || next == TaskState::PendT) {
    auto it = behavior.dwell_ticks.find(next);
    delay_remaining = it == behavior.dwell_ticks.end() || it->second == 0 ? 1 : it->second;
  } else {
    delay_remaining = 0;
  }
}

void SimTask::advance_pc() {
  if (behavior.pc_walk.empty()) return;
  link_register = pc;
  pc_index = (pc_index + 1) % behavior.pc_walk.size();
  pc = behavior.pc_walk[pc_index];
  sp = stack_base - 16 * (pc_index % 8);
}

}  // namespace diver::sim
