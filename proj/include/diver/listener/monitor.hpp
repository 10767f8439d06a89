#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <thread>

#include "diver/listener/alerts.hpp"

namespace diver::listener {

/// Runs every detector once. Run-time statistics need a full window; with a
/// shorter one only the task inventory is checked (against the newest sample,
/// fetched on demand when the window is empty).
std::vector<Alert> check_device(Link& link, const Baseline& baseline, std::span<const Sample> window);

struct MonitorOptions {
  double sample_rate_hz = 1.0;
  std::size_t window = 60;
  std::chrono::milliseconds check_interval{10'000};
  ActivityThresholds activity;
};

/// Field mode: keeps a rolling window of task_details samples from a stream
/// subscription and checks the device against the baseline.
class Monitor {
 public:
  using RecordListener = std::function<void(const measurer::RecordSet&)>;

  Monitor(Link& link, AlertStore& alerts, MonitorOptions options = {});
  ~Monitor();
  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  void set_baseline(std::optional<Baseline> b);
  std::optional<Baseline> baseline() const;

  /// Subscribes `task_details id=all granularity=full` at the sample rate.
  void attach();
  void detach();
  bool attached() const { return sub_id_ != 0; }

  /// Stream entry point; safe to call directly.
  void on_record(const measurer::RecordSet& rs);

  /// One detection pass; returns the alerts not seen before. Does nothing
  /// without a baseline.
  std::vector<Alert> check();

  /// Background detection loop for network links.
  void start();
  void stop();

  std::vector<Sample> window() const;
  std::optional<measurer::RecordSet> latest() const;
  Profiles window_profiles() const;
  const MonitorOptions& options() const { return options_; }
  Link& link() { return link_; }
  AlertStore& alerts() { return alerts_; }

  std::uint64_t listen(RecordListener fn);
  void unlisten(std::uint64_t id);

 private:
  Link& link_;
  AlertStore& alerts_;
  MonitorOptions options_;
  std::atomic<std::uint64_t> sub_id_{0};

  mutable std::mutex mu_;
  std::optional<Baseline> baseline_;
  std::deque<Sample> window_;
  std::optional<measurer::RecordSet> latest_;
  std::map<std::uint64_t, RecordListener> listeners_;
  std::uint64_t next_listener_ = 1;

  std::mutex loop_mu_;
  std::condition_variable loop_cv_;
  bool stopping_ = false;
  std::thread loop_;
};

}  // namespace diver::listener
