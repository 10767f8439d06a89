#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diver/listener/baseline.hpp"

namespace diver::listener {

enum class Category : std::uint8_t { Config, Module, Timer, Runtime };
enum class AlertSeverity : std::uint8_t { Info, Warning, Critical };

std::string_view to_string(Category c);
Category parse_category(std::string_view s);
std::string_view to_string(AlertSeverity s);
AlertSeverity parse_alert_severity(std::string_view s);

struct Alert {
  Category category = Category::Config;
  AlertSeverity severity = AlertSeverity::Warning;
  /// Finding name within the category, e.g. HASH_MISMATCH.
  std::string kind;
  std::string subject;
  std::string detail;
  std::uint64_t observed_at_tick = 0;
  std::string baseline_ref;

  /// Identity used to suppress repeats: category, kind and subject.
  std::string key() const;
  bool operator==(const Alert&) const = default;
};

// All detectors are pure functions of their arguments.

std::vector<Alert> detect_config(const Baseline& b, const measurer::RecordSet& sysinfo);
std::vector<Alert> detect_modules(const Baseline& b, const measurer::RecordSet& modules);
std::vector<Alert> detect_timer(const Baseline& b, const measurer::RecordSet& timer_tree);

/// Task inventory against the newest sample: MISSING_TASK, UNEXPECTED_TASK,
/// PRIORITY_CHANGED. Needs a single sample.
std::vector<Alert> detect_task_inventory(const Baseline& b, const Sample& latest);

/// Inventory plus statistics (STATE_SHIFT, PC_STAGNATION). Throws
/// InsufficientSamples below the baseline's min_window.
std::vector<Alert> detect_runtime(const Baseline& b, std::span<const Sample> window);

enum class Bucket : std::uint8_t { Low, Med, High };
std::string_view to_string(Bucket b);

struct ActivityLevel {
  Bucket ready_bucket = Bucket::Low;
  Bucket pc_bucket = Bucket::Low;
  bool operator==(const ActivityLevel&) const = default;
};

/// Boundaries belong to the higher bucket.
struct ActivityThresholds {
  double ready_med = 0.10;
  double ready_high = 0.50;  // strictly above is high
  std::size_t pc_med = 3;
  std::size_t pc_high = 11;
};

ActivityLevel activity_level(double ready_fraction, std::size_t distinct_pc,
                             const ActivityThresholds& t = {});

/// Detector tuning loaded from a JSON config file.
struct ListenerConfig {
  Tolerances tolerances;
  ActivityThresholds activity;
};
ListenerConfig load_listener_config(const std::filesystem::path& path);

}  // namespace diver::listener
