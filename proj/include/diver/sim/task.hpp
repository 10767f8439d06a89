#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diver/util/bytes.hpp"

namespace diver::sim {

enum class TaskState : std::uint8_t { Ready, Pend, PendT, Delay, Suspend, Running };

inline constexpr TaskState kAllTaskStates[] = {TaskState::Ready,   TaskState::Pend,
                                               TaskState::PendT,   TaskState::Delay,
                                               TaskState::Suspend, TaskState::Running};

std::string_view to_string(TaskState s);
TaskState parse_task_state(std::string_view text);

/// Drives reproducible task activity: a first-order Markov chain over TaskState.
///
/// Timed states (DELAY, PEND_T) start a countdown of `dwell_ticks[state]` ticks on
/// entry and fall back to READY when it expires. A RUNNING task draws its next
/// state from the READY row. When `transitions` is empty the chain degenerates
/// to an i.i.d. draw: READY with probability `ready_bias`, PEND otherwise.
struct BehaviorProfile {
  std::uint64_t seed = 0;
  std::map<TaskState, std::map<TaskState, double>> transitions;
  std::map<TaskState, std::uint32_t> dwell_ticks;
  std::vector<Address> pc_walk;
  double ready_bias = 0.0;
  /// The task blocks on the device's UDP inbox instead of following the chain.
  bool io_driven = false;

  static BehaviorProfile from_ready_bias(double bias, std::vector<Address> pc_walk,
                                         std::uint64_t seed = 0);

  /// Throws BadArgument when a row does not sum to 1 or pc_walk is empty.
  void validate() const;
  /// Row used for a task currently in `s` (RUNNING draws from READY).
  const std::map<TaskState, double>* row_for(TaskState s) const;
};

struct SimTask {
  std::uint64_t task_id = 0;
  std::string name;
  TaskState state = TaskState::Ready;
  int priority = 100;  // 0 highest
  Address entry_point = 0;
  Address pc = 0;
  Address sp = 0;
  Address stack_base = 0;
  Address link_register = 0;
  std::uint32_t delay_remaining = 0;
  BehaviorProfile behavior;
  std::optional<std::string> owner_module;

  std::size_t pc_index = 0;
  std::uint64_t rng_state = 0;

  /// Next uniform double in [0, 1) from the task's private stream.
  double next_uniform();
  /// Applies one Markov step (no-op for SUSPEND and timed states).
  void step_behavior();
  /// Advances the PC walk by one position; called for RUNNING ticks.
  void advance_pc();
};

}  // namespace diver::sim
