#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "diver/measurer/command.hpp"
#include "diver/measurer/record_set.hpp"
#include "diver/sim/device.hpp"

namespace diver::measurer {

/// How the measurer reaches the device. Reads are snapshots; writes run on
/// the device owner at a tick boundary.
class DeviceAccess {
 public:
  virtual ~DeviceAccess() = default;
  virtual sim::DeviceSnapshot snapshot() = 0;
  virtual void mutate(const std::function<void(sim::Device&)>& fn) = 0;
  /// Lets `ticks` of device time elapse.
  virtual void wait_ticks(std::uint64_t ticks) = 0;
  virtual std::uint64_t reset_count() = 0;
};

/// Single-threaded access that advances simulated time on demand. Used for
/// accelerated runs and tests.
class SteppedDevice : public DeviceAccess {
 public:
  explicit SteppedDevice(sim::Device& device) : device_(device) {}
  sim::DeviceSnapshot snapshot() override { return device_.snapshot(); }
  void mutate(const std::function<void(sim::Device&)>& fn) override { fn(device_); }
  void wait_ticks(std::uint64_t ticks) override { device_.advance(ticks); }
  std::uint64_t reset_count() override { return device_.reset_count(); }
  sim::Device& device() { return device_; }

 private:
  sim::Device& device_;
};

/// Per-connection hooks the dispatcher needs for streaming verbs.
class SessionContext {
 public:
  virtual ~SessionContext() = default;
  virtual std::uint64_t subscribe(const Command& command, double rate_hz) = 0;
  virtual bool unsubscribe(std::uint64_t sub_id) = 0;
  /// True once the client has gone away; long-running verbs stop early.
  virtual bool cancelled() const { return false; }
};

inline constexpr double kMaxRateHz = 100.0;

struct DispatchOptions {
  bool allow_inject = false;
};

class Dispatcher {
 public:
  using Handler = std::function<RecordSet(Command&, SessionContext*)>;

  explicit Dispatcher(DeviceAccess& device, DispatchOptions options = {});

  /// Full request path: parse, route, render. Never throws; failures become
  /// `#error` payloads.
  std::string handle(std::string_view request, SessionContext* ctx);

  /// Runs a parsed command without streaming. Throws Error.
  RecordSet execute(Command command, SessionContext* ctx = nullptr);

  /// One emission of a subscription: the command's RecordSet with a leading
  /// sub_id column.
  RecordSet stream_record(std::uint64_t sub_id, const Command& command);

  std::vector<std::string> verbs() const;
  DeviceAccess& device() { return device_; }

 private:
  struct Verb {
    std::string usage;
    Handler fn;
  };
  void add(std::string name, std::string usage, Handler fn);

  DeviceAccess& device_;
  DispatchOptions options_;
  std::map<std::string, Verb, std::less<>> verbs_;
};

/// True when the command asks for a stream (`stream=on`, or `rate=` on any
/// verb other than task_activity, where rate is the sampling rate).
bool wants_stream(const Command& c);
/// Validated stream rate: 0 < r <= 100 (RateTooHigh above).
double stream_rate(const Command& c);

}  // namespace diver::measurer
