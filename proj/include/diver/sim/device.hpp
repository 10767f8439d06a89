#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diver/sim/task.hpp"
#include "diver/util/bytes.hpp"

namespace diver::sim {

/// One simulation tick is one millisecond of device time.
inline constexpr std::uint32_t kTicksPerSecond = 1000;
inline constexpr std::size_t kSyslogCapacity = 1024;
inline constexpr std::size_t kMaxMemoryRead = 65536;
inline constexpr std::size_t kModuleHashPrefix = 4096;

inline constexpr Address kKernelBase = 0x00100000;
inline constexpr Address kScriptArena = 0x08000000;
inline constexpr Address kAttackArena = 0x09000000;

enum class CallbackKind : std::uint8_t { Native, Script };
enum class NativeAction : std::uint8_t { None, SampleInputs, LogSensors, Heartbeat, Exfiltrate };

std::string_view to_string(CallbackKind k);
CallbackKind parse_callback_kind(std::string_view s);
std::string_view to_string(NativeAction a);
NativeAction parse_native_action(std::string_view s);

struct TimerCallback {
  int callback_id = 0;
  std::string name;
  Address address = 0;
  std::uint32_t segment_len = 64;
  CallbackKind kind = CallbackKind::Native;
  NativeAction action = NativeAction::None;
};

struct TimerNode {
  int timer_id = 0;
  std::uint32_t period_ticks = 10;
  std::uint32_t divisor_from_parent = 1;
  std::vector<TimerCallback> callbacks;
  std::vector<TimerNode> children;
};

enum class ModuleKind : std::uint8_t { KernelModule, Rtp, CApplication };
std::string_view to_string(ModuleKind k);
ModuleKind parse_module_kind(std::string_view s);

struct LoadedModule {
  std::string name;
  ModuleKind kind = ModuleKind::KernelModule;
  std::string file_path;
  Address load_address = 0;
  std::shared_ptr<const Bytes> segment = std::make_shared<Bytes>();
  Address jump_table_addr = 0;
  Address control_fn_addr = 0;

  Address end() const { return load_address + segment->size(); }
  bool contains(Address a) const { return a >= load_address && a < end(); }
};

/// Readable memory that is not a module segment (kernel text, scripts, injected code).
struct MemoryRegion {
  std::string label;
  std::shared_ptr<const Bytes> bytes = std::make_shared<Bytes>();
};

enum class Severity : std::uint8_t { Info, Warning, Error };
std::string_view to_string(Severity s);

struct SyslogEntry {
  std::uint64_t tick = 0;
  Severity severity = Severity::Info;
  std::string text;
};

enum class IoKind : std::uint8_t { AnalogIn, AnalogOut, DigitalIn, DigitalOut };
IoKind parse_io_kind(std::string_view s);

struct Datagram {
  Bytes payload;
  std::uint64_t peer = 0;
};

struct DeviceState {
  std::string kernel_version = "VxWorks 7 SR0640 (sim)";
  std::uint64_t uptime_ticks = 0;
  std::int64_t rtc_ms = 0;
  std::map<std::string, std::string> config;
  std::deque<SyslogEntry> syslog;
  std::shared_ptr<const Bytes> flash = std::make_shared<Bytes>(256 * 1024, 0xff);
  std::vector<double> analog_in = std::vector<double>(16, 0.0);
  std::vector<double> analog_out = std::vector<double>(16, 0.0);
  std::vector<std::uint8_t> digital_in = std::vector<std::uint8_t>(32, 0);
  std::vector<std::uint8_t> digital_out = std::vector<std::uint8_t>(32, 0);
  std::vector<SimTask> tasks;
  TimerNode timer_root;
  std::vector<LoadedModule> modules;
  std::map<Address, MemoryRegion> memory;
  std::uint64_t rng_seed = 42;
  std::uint64_t io_rng = 0;
  std::uint64_t sensor_log_cursor = 0;
};

/// Immutable view of the device at a tick boundary. Cheap to copy and safe to
/// share across threads.
class DeviceSnapshot {
 public:
  DeviceSnapshot() = default;
  explicit DeviceSnapshot(std::shared_ptr<const DeviceState> s) : state_(std::move(s)) {}

  const DeviceState& state() const { return *state_; }
  const DeviceState* operator->() const { return state_.get(); }
  std::uint64_t tick() const { return state_->uptime_ticks; }

  Bytes read_memory(Address addr, std::size_t len) const;
  const SimTask* find_task(std::uint64_t task_id) const;
  const SimTask* find_task(std::string_view name) const;
  /// Canonical text of every externally observable field; equal snapshots
  /// produce identical text.
  std::string canonical() const;

 private:
  std::shared_ptr<const DeviceState> state_;
};

Bytes read_memory(const DeviceState& s, Address addr, std::size_t len);
bool is_readable(const DeviceState& s, Address addr, std::size_t len = 1);
/// SHA-256 of the first min(4096, len) bytes of the module segment.
std::string module_segment_hash(const LoadedModule& m);
/// SHA-256 over the callback's segment_len bytes at its address.
std::string callback_code_hash(const DeviceState& s, const TimerCallback& cb);

TimerNode* find_timer(TimerNode& root, int timer_id);
const TimerNode* find_timer(const TimerNode& root, int timer_id);
/// Re-derives child periods from the root period and divisors.
void recompute_periods(TimerNode& root);

enum class TaskActionKind : std::uint8_t { Delete, Suspend, Resume, SetPriority, OverwriteCode };

struct TaskAction {
  TaskActionKind kind = TaskActionKind::Suspend;
  int priority = 0;
  std::vector<Address> code;

  static TaskAction remove() { return {TaskActionKind::Delete, 0, {}}; }
  static TaskAction suspend() { return {TaskActionKind::Suspend, 0, {}}; }
  static TaskAction resume() { return {TaskActionKind::Resume, 0, {}}; }
  static TaskAction set_priority(int p) { return {TaskActionKind::SetPriority, p, {}}; }
  static TaskAction overwrite_code(std::vector<Address> a) {
    return {TaskActionKind::OverwriteCode, 0, std::move(a)};
  }
};

struct Fixture;

/// The simulated RTOS. A single owner drives tick(); everything else reads
/// snapshots.
class Device {
 public:
  using ScriptAction = std::function<void(Device&)>;
  using IoHandler = std::function<std::optional<Bytes>(ByteView request)>;

  explicit Device(const Fixture& fixture);
  Device(const Fixture& fixture, std::uint64_t seed);

  const DeviceState& state() const { return state_; }
  DeviceSnapshot snapshot() const;

  void tick();
  void advance(std::uint64_t ticks);

  std::uint64_t spawn_task(const std::string& name, int priority, Address entry_point,
                           BehaviorProfile behavior,
                           std::optional<std::string> owner_module = std::nullopt);
  void control_task(std::uint64_t task_id, const TaskAction& action);
  const SimTask* find_task(std::string_view name) const;
  const SimTask& task(std::uint64_t task_id) const;

  void load_module(LoadedModule module);
  void replace_module_segment(const std::string& name, Bytes segment);
  const LoadedModule* find_module(std::string_view name) const;

  Address map_region(const std::string& label, Bytes bytes, Address arena);
  Bytes read_memory(Address addr, std::size_t len) const;
  /// Patches bytes inside an existing module segment or region.
  void write_memory(Address addr, ByteView data);

  int add_timer_callback(int timer_id, TimerCallback cb);
  void set_timer_divisor(int timer_id, std::uint32_t divisor);
  void redirect_callback(int callback_id, Address new_address, std::uint32_t segment_len);
  int register_script(int timer_id, const std::string& source, ScriptAction action);

  double io_read(IoKind kind, std::size_t channel) const;
  void io_write(IoKind kind, std::size_t channel, double value);

  void syslog_write(Severity sev, std::string text);
  std::vector<SyslogEntry> syslog_tail(std::size_t n) const;

  Bytes flash_read(std::size_t offset, std::size_t len) const;
  void flash_write(std::size_t offset, ByteView data);

  void set_rtc(std::int64_t epoch_ms) { state_.rtc_ms = epoch_ms; }
  void set_config(const std::string& key, const std::string& value);
  void erase_config(const std::string& key);

  /// Reinitializes from the fixture: uptime 0, fresh task ids, scripts dropped.
  void reset();
  std::uint64_t reset_count() const { return reset_count_; }

  void set_io_handler(IoHandler h) { io_handler_ = std::move(h); }
  void deliver(Datagram d) { inbox_.push_back(std::move(d)); }
  std::vector<Datagram> take_outbox();
  /// Marks a task as driven by the UDP inbox (the pendulum controller).
  void make_io_driven(std::uint64_t task_id);

 private:
  void init_from_fixture();
  SimTask& mutable_task(std::uint64_t task_id);
  void fire_timers(const TimerNode& node);
  void run_native(const TimerCallback& cb);
  void schedule();
  int next_callback_id();
  double io_uniform();
  Bytes& flash_mut();

  std::shared_ptr<const Fixture> fixture_;
  std::uint64_t seed_;
  DeviceState state_;
  std::uint64_t next_task_id_ = 1;
  std::uint64_t reset_count_ = 0;
  std::map<int, ScriptAction> scripts_;
  IoHandler io_handler_;
  std::deque<Datagram> inbox_;
  std::vector<Datagram> outbox_;
};

/// Applies one of the ten attack scenarios (1..10); throws InvalidScenario otherwise.
void inject_attack(Device& device, int scenario);
inline constexpr const char* kControllerTask = "tCtrl";

}  // namespace diver::sim
