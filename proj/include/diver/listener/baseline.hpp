#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diver/listener/link.hpp"
#include "diver/sim/task.hpp"

namespace diver::listener {

using sim::TaskState;

/// States the statistics track. RUNNING is counted as READY.
inline constexpr TaskState kTrackedStates[] = {TaskState::Ready, TaskState::Pend, TaskState::PendT,
                                               TaskState::Delay, TaskState::Suspend};
TaskState tracked(TaskState s);

/// Task identity across samples: the name, or "@<entry_point>" when unnamed.
std::string task_key(const std::string& name, const std::string& entry_point);

struct TaskSample {
  std::string key;
  std::uint64_t task_id = 0;
  TaskState state = TaskState::Ready;
  int priority = 0;
  std::optional<Address> pc;
};

/// One task_details (or taskstats) emission.
struct Sample {
  std::uint64_t tick = 0;
  std::vector<TaskSample> tasks;

  static Sample from_records(const measurer::RecordSet& rs);
  const TaskSample* find(const std::string& key) const;
};

struct TaskProfile {
  std::map<TaskState, double> state_fractions;
  std::size_t distinct_pc = 0;
  int priority = 0;
  std::size_t samples = 0;

  bool operator==(const TaskProfile&) const = default;
};
using Profiles = std::map<std::string, TaskProfile>;

/// Per-task fraction of samples in each tracked state, distinct PCs and the
/// most recent priority, over the samples in which the task appears.
Profiles compute_profiles(std::span<const Sample> window);

struct ModuleInfo {
  std::string kind;
  std::string file_path;
  std::string load_address;
  std::string segment_hash;

  bool operator==(const ModuleInfo&) const = default;
};
std::map<std::string, ModuleInfo> modules_from_records(const measurer::RecordSet& rs);

/// One row of the pre-order timer listing; callback fields are "-" for
/// nodes without callbacks.
struct TimerRow {
  int depth = 0;
  int timer_id = 0;
  std::uint32_t period_ticks = 0;
  std::uint32_t divisor = 1;
  std::string callback_id = "-";
  std::string kind = "-";
  std::string name = "-";
  std::string address = "-";
  std::string segment_len = "-";
  std::string code_hash = "-";

  bool has_callback() const { return callback_id != "-"; }
  bool operator==(const TimerRow&) const = default;
};
std::vector<TimerRow> timer_rows_from_records(const measurer::RecordSet& rs);

/// Keyed "section.key", except the config section which keeps bare keys.
/// Volatile kernel counters (uptime, clock, task count) are left out.
std::map<std::string, std::string> config_from_sysinfo(const measurer::RecordSet& rs);

struct Tolerances {
  double state_fraction_eps = 0.15;
  double distinct_pc_ratio = 0.25;
  /// Minimum observation window for run-time checks.
  std::size_t min_window = 30;

  bool operator==(const Tolerances&) const = default;
};

struct Baseline {
  static constexpr int kVersion = 1;

  std::string device_id;
  std::int64_t created_at = 0;  // epoch ms
  double sample_rate_hz = 1.0;
  std::size_t sample_count = 0;
  std::map<std::string, std::string> config;
  std::map<std::string, ModuleInfo> modules;
  std::vector<TimerRow> timer_tree;
  Profiles task_profiles;
  Tolerances tolerances;

  bool operator==(const Baseline&) const = default;
};

struct BuildOptions {
  double sample_rate_hz = 1.0;
  double duration_s = 60.0;
  std::size_t min_samples = 10;
  Tolerances tolerances;
  /// Called with every raw stream record, for recording or display.
  Link::StreamHandler on_record;
};

/// Pulls sysinfo, modules and the timer tree once, then streams
/// `task_details` for the duration. Throws InsufficientSamples when fewer
/// than min_samples arrive.
Baseline build_baseline(Link& link, const BuildOptions& options = {});

/// Versioned JSON with a SHA-256 checksum over the document without it.
std::string baseline_to_json(const Baseline& b);
Baseline baseline_from_json(const std::string& text);
void save_baseline(const Baseline& b, const std::filesystem::path& path);
Baseline load_baseline(const std::filesystem::path& path);

}  // namespace diver::listener
