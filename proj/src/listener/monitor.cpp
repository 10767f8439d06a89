#include "diver/listener/monitor.hpp"

namespace diver::listener {

using measurer::RecordSet;

std::vector<Alert> check_device(Link& link, const Baseline& baseline, std::span<const Sample> window) {
  std::vector<Alert> out;
  auto add = [&](std::vector<Alert> v) { out.insert(out.end(), v.begin(), v.end()); };
  add(detect_config(baseline, link.request("sysinfo")));
  add(detect_modules(baseline, link.request("modules")));
  add(detect_timer(baseline, link.request("timer_tree")));
  if (window.size() >= baseline.tolerances.min_window && !window.empty()) {
    add(detect_runtime(baseline, window));
  } else if (!window.empty()) {
    add(detect_task_inventory(baseline, window.back()));
  } else {
    add(detect_task_inventory(baseline, Sample::from_records(link.request("task_details id=all granularity=full"))));
  }
  return out;
}

Monitor::Monitor(Link& link, AlertStore& alerts, MonitorOptions options)
    : link_(link), alerts_(alerts), options_(std::move(options)) {}

Monitor::~Monitor() {
  stop();
  try {
    detach();
  } catch (const Error&) {
  }
}

void Monitor::set_baseline(std::optional<Baseline> b) {
  std::lock_guard lk(mu_);
  baseline_ = std::move(b);
}

std::optional<Baseline> Monitor::baseline() const {
  std::lock_guard lk(mu_);
  return baseline_;
}

void Monitor::attach() {
  if (attached()) return;
  sub_id_ = link_.subscribe(
      "task_details id=all granularity=full rate=" + measurer::format_real(options_.sample_rate_hz),
      [this](const RecordSet& rs) { on_record(rs); });
}

void Monitor::detach() {
  auto id = sub_id_.exchange(0);
  if (id != 0 && link_.connected()) link_.unsubscribe(id);
}

void Monitor::on_record(const RecordSet& rs) {
  std::vector<RecordListener> targets;
  {
    std::lock_guard lk(mu_);
    window_.push_back(Sample::from_records(rs));
    while (window_.size() > options_.window) window_.pop_front();
    latest_ = rs;
    for (const auto& [id, fn] : listeners_) targets.push_back(fn);
  }
  for (const auto& fn : targets) fn(rs);
}

std::vector<Alert> Monitor::check() {
  std::optional<Baseline> b;
  std::vector<Sample> w;
  {
    std::lock_guard lk(mu_);
    b = baseline_;
    w.assign(window_.begin(), window_.end());
  }
  if (!b) return {};
  return alerts_.add(check_device(link_, *b, w));
}

void Monitor::start() {
  if (loop_.joinable()) return;
  {
    std::lock_guard lk(loop_mu_);
    stopping_ = false;
  }
  loop_ = std::thread([this] {
    std::unique_lock lk(loop_mu_);
    while (!stopping_) {
      if (loop_cv_.wait_for(lk, options_.check_interval, [this] { return stopping_; })) break;
      lk.unlock();
      try {
        check();
      } catch (const Error&) {
        // Transient device errors; the next pass retries.
      }
      lk.lock();
      if (!link_.connected()) break;
    }
  });
}

void Monitor::stop() {
  {
    std::lock_guard lk(loop_mu_);
    stopping_ = true;
  }
  loop_cv_.notify_all();
  if (loop_.joinable()) loop_.join();
}

std::vector<Sample> Monitor::window() const {
  std::lock_guard lk(mu_);
  return {window_.begin(), window_.end()};
}

std::optional<RecordSet> Monitor::latest() const {
  std::lock_guard lk(mu_);
  return latest_;
}

Profiles Monitor::window_profiles() const {
  auto w = window();
  return compute_profiles(w);
}

std::uint64_t Monitor::listen(RecordListener fn) {
  std::lock_guard lk(mu_);
  auto id = next_listener_++;
  listeners_[id] = std::move(fn);
  return id;
}

void Monitor::unlisten(std::uint64_t id) {
  std::lock_guard lk(mu_);
  listeners_.erase(id);
}

}  // namespace diver::listener
