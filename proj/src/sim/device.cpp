#include "diver/sim/device.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "diver/sim/fixture.hpp"
#include "diver/util/error.hpp"

namespace diver::sim {

namespace {

constexpr std::size_t kSensorLogBase = 0x20000;
constexpr std::size_t kSensorLogSize = 0x10000;
constexpr Address kArenaSpan = 0x01000000;

template <typename Fn>
void visit_preorder(const TimerNode& node, int depth, Fn&& fn) {
  fn(node, depth);
  std::vector<const TimerNode*> kids;
  for (const auto& c : node.children) kids.push_back(&c);
  std::sort(kids.begin(), kids.end(),
            [](const TimerNode* a, const TimerNode* b) { return a->timer_id < b->timer_id; });
  for (const auto* c : kids) visit_preorder(*c, depth + 1, fn);
}

TimerCallback* find_callback(TimerNode& node, int callback_id) {
  for (auto& cb : node.callbacks)
    if (cb.callback_id == callback_id) return &cb;
  for (auto& c : node.children)
    if (auto* cb = find_callback(c, callback_id)) return cb;
  return nullptr;
}

int max_callback_id(const TimerNode& node) {
  int m = 0;
  for (const auto& cb : node.callbacks) m = std::max(m, cb.callback_id);
  for (const auto& c : node.children) m = std::max(m, max_callback_id(c));
  return m;
}

void recompute(TimerNode& node, std::uint32_t parent_period) {
  node.period_ticks = parent_period * node.divisor_from_parent;
  for (auto& c : node.children) recompute(c, node.period_ticks);
}

bool overlaps(Address a0, Address a1, Address b0, Address b1) { return a0 < b1 && b0 < a1; }

}  // namespace

std::string_view to_string(CallbackKind k) { return k == CallbackKind::Script ? "script" : "native"; }

CallbackKind parse_callback_kind(std::string_view s) {
  if (s == "native") return CallbackKind::Native;
  if (s == "script") return CallbackKind::Script;
  throw Error(ErrorCode::BadArgument, "unknown callback kind '" + std::string(s) + "'");
}

std::string_view to_string(NativeAction a) {
  switch (a) {
    case NativeAction::None: return "none";
    case NativeAction::SampleInputs: return "sample_inputs";
    case NativeAction::LogSensors: return "log_sensors";
    case NativeAction::Heartbeat: return "heartbeat";
    case NativeAction::Exfiltrate: return "exfiltrate";
  }
  return "none";
}

NativeAction parse_native_action(std::string_view s) {
  for (auto a : {NativeAction::None, NativeAction::SampleInputs, NativeAction::LogSensors,
                 NativeAction::Heartbeat, NativeAction::Exfiltrate})
    if (to_string(a) == s) return a;
  throw Error(ErrorCode::BadArgument, "unknown native action '" + std::string(s) + "'");
}

std::string_view to_string(ModuleKind k) {
  switch (k) {
    case ModuleKind::KernelModule: return "kernel_module";
    case ModuleKind::Rtp: return "rtp";
    case ModuleKind::CApplication: return "c_application";
  }
  return "?";
}

ModuleKind parse_module_kind(std::string_view s) {
  for (auto k : {ModuleKind::KernelModule, ModuleKind::Rtp, ModuleKind::CApplication})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::BadArgument, "unknown module kind '" + std::string(s) + "'");
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "info";
}

IoKind parse_io_kind(std::string_view s) {
  if (s == "analog_in" || s == "ain") return IoKind::AnalogIn;
  if (s == "analog_out" || s == "aout" || s == "analog") return IoKind::AnalogOut;
  if (s == "digital_in" || s == "din") return IoKind::DigitalIn;
  if (s == "digital_out" || s == "dout" || s == "digital") return IoKind::DigitalOut;
  throw Error(ErrorCode::BadArgument, "unknown io kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Free helpers

Bytes read_memory(const DeviceState& s, Address addr, std::size_t len) {
  if (len > kMaxMemoryRead) throw Error(ErrorCode::BadArgument, "read length exceeds 65536");
  auto slice = [&](Address base, const Bytes& bytes) -> std::optional<Bytes> {
    if (addr >= base && addr + len <= base + bytes.size()) {
      auto off = static_cast<std::size_t>(addr - base);
      return Bytes(bytes.begin() + off, bytes.begin() + off + len);
    }
    return std::nullopt;
  };
  for (const auto& m : s.modules)
    if (auto b = slice(m.load_address, *m.segment)) return *b;
  auto it = s.memory.upper_bound(addr);
  if (it != s.memory.begin()) {
    --it;
    if (auto b = slice(it->first, *it->second.bytes)) return *b;
  }
  throw Error(ErrorCode::UnmappedAddress, "address range " + format_address(addr) + "+" +
                                              std::to_string(len) + " is not mapped");
}

bool is_readable(const DeviceState& s, Address addr, std::size_t len) {
  try {
    read_memory(s, addr, len);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string module_segment_hash(const LoadedModule& m) {
  auto n = std::min(kModuleHashPrefix, m.segment->size());
  return sha256_hex(ByteView(m.segment->data(), n));
}

std::string callback_code_hash(const DeviceState& s, const TimerCallback& cb) {
  return sha256_hex(read_memory(s, cb.address, cb.segment_len));
}

TimerNode* find_timer(TimerNode& root, int timer_id) {
  if (root.timer_id == timer_id) return &root;
  for (auto& c : root.children)
    if (auto* t = find_timer(c, timer_id)) return t;
  return nullptr;
}

const TimerNode* find_timer(const TimerNode& root, int timer_id) {
  return find_timer(const_cast<TimerNode&>(root), timer_id);
}

void recompute_periods(TimerNode& root) {
  for (auto& c : root.children) recompute(c, root.period_ticks);
}

// ---------------------------------------------------------------------------
// DeviceSnapshot

Bytes DeviceSnapshot::read_memory(Address addr, std::size_t len) const {
  return sim::read_memory(*state_, addr, len);
}

const SimTask* DeviceSnapshot::find_task(std::uint64_t task_id) const {
  for (const auto& t : state_->tasks)
    if (t.task_id == task_id) return &t;
  return nullptr;
}

const SimTask* DeviceSnapshot::find_task(std::string_view name) const {
  for (const auto& t : state_->tasks)
    if (t.name == name) return &t;
  return nullptr;
}

std::string DeviceSnapshot::canonical() const {
  const auto& s = *state_;
  std::ostringstream os;
  os.precision(17);
  os << "uptime " << s.uptime_ticks << "\nrtc " << s.rtc_ms << "\nkernel " << s.kernel_version
     << "\n";
  for (const auto& [k, v] : s.config) os << "config " << k << "=" << v << "\n";
  for (const auto& t : s.tasks)
    os << "task " << t.task_id << " " << t.name << " " << to_string(t.state) << " " << t.priority
       << " " << t.entry_point << " " << t.pc << " " << t.sp << " " << t.link_register << " "
       << t.delay_remaining << " " << t.owner_module.value_or("-") << "\n";
  for (const auto& m : s.modules)
    os << "module " << m.name << " " << to_string(m.kind) << " " << m.file_path << " "
       << m.load_address << " " << m.segment->size() << " " << m.jump_table_addr << " "
       << m.control_fn_addr << " " << sha256_hex(*m.segment) << "\n";
  for (const auto& [addr, r] : s.memory)
    os << "region " << addr << " " << r.label << " " << sha256_hex(*r.bytes) << "\n";
  visit_preorder(s.timer_root, 0, [&](const TimerNode& n, int depth) {
    os << "timer " << depth << " " << n.timer_id << " " << n.period_ticks << " "
       << n.divisor_from_parent << "\n";
    for (const auto& cb : n.callbacks)
      os << " cb " << cb.callback_id << " " << cb.name << " " << cb.address << " "
         << cb.segment_len << " " << to_string(cb.kind) << " " << to_string(cb.action) << "\n";
  });
  for (double v : s.analog_in) os << "ain " << v << "\n";
  for (double v : s.analog_out) os << "aout " << v << "\n";
  for (auto v : s.digital_in) os << "din " << int(v) << "\n";
  for (auto v : s.digital_out) os << "dout " << int(v) << "\n";
  for (const auto& e : s.syslog)
    os << "log " << e.tick << " " << to_string(e.severity) << " " << e.text << "\n";
  os << "flash " << sha256_hex(*s.flash) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Device

Device::Device(const Fixture& fixture) : Device(fixture, fixture.seed) {}

Device::Device(const Fixture& fixture, std::uint64_t seed)
    : fixture_(std::make_shared<const Fixture>(fixture)), seed_(seed) {
  init_from_fixture();
}

void Device::init_from_fixture() {
  state_ = fixture_->base;
  state_.tasks.clear();
  state_.uptime_ticks = 0;
  state_.rng_seed = seed_;
  state_.io_rng = mix_seed(seed_ ^ 0x10);
  recompute_periods(state_.timer_root);
  for (const auto& spec : fixture_->tasks) {
    auto id = spawn_task(spec.name, spec.priority, spec.entry_point, spec.behavior,
                         spec.owner_module);
    if (spec.stack_base != 0) {
      auto& t = mutable_task(id);
      t.stack_base = spec.stack_base;
      t.sp = spec.stack_base;
    }
  }
}

DeviceSnapshot Device::snapshot() const {
  return DeviceSnapshot(std::make_shared<const DeviceState>(state_));
}

void Device::tick() {
  ++state_.uptime_ticks;
  ++state_.rtc_ms;

  std::vector<bool> woke(state_.tasks.size(), false);
  for (std::size_t i = 0; i < state_.tasks.size(); ++i) {
    auto& t = state_.tasks[i];
    if ((t.state == TaskState::Delay || t.state == TaskState::PendT) && t.delay_remaining > 0) {
      if (--t.delay_remaining == 0) {
        t.state = TaskState::Ready;
        woke[i] = true;
      }
    }
  }

  for (std::size_t i = 0; i < state_.tasks.size(); ++i) {
    if (woke[i]) continue;
    auto& t = state_.tasks[i];
    if (t.behavior.io_driven) {
      if (t.state != TaskState::Suspend)
        t.state = inbox_.empty() ? TaskState::Pend : TaskState::Ready;
    } else {
      t.step_behavior();
    }
  }

  fire_timers(state_.timer_root);
  schedule();
}

void Device::advance(std::uint64_t ticks) {
  for (std::uint64_t i = 0; i < ticks; ++i) tick();
}

void Device::fire_timers(const TimerNode& node) {
  if (node.period_ticks > 0 && state_.uptime_ticks % node.period_ticks == 0) {
    for (const auto& cb : node.callbacks) {
      if (cb.kind == CallbackKind::Script) {
        auto it = scripts_.find(cb.callback_id);
        if (it != scripts_.end()) it->second(*this);
      } else {
        run_native(cb);
      }
    }
  }
  for (const auto& c : node.children) fire_timers(c);
}

double Device::io_uniform() {
  state_.io_rng = mix_seed(state_.io_rng);
  return static_cast<double>(state_.io_rng >> 11) * 0x1.0p-53;
}

Bytes& Device::flash_mut() {
  if (state_.flash.use_count() > 1) state_.flash = std::make_shared<Bytes>(*state_.flash);
  return const_cast<Bytes&>(*state_.flash);
}

void Device::run_native(const TimerCallback& cb) {
  switch (cb.action) {
    case NativeAction::None:
    case NativeAction::Exfiltrate:
      break;
    case NativeAction::SampleInputs: {
      double t = static_cast<double>(state_.uptime_ticks) / kTicksPerSecond;
      for (std::size_t ch = 8; ch < state_.analog_in.size(); ++ch) {
        double f = static_cast<double>(ch - 7) / 4.0;
        state_.analog_in[ch] =
            1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * f * t) + 0.01 * (io_uniform() - 0.5);
      }
      break;
    }
    case NativeAction::LogSensors: {
      Bytes rec;
      put_f64_le(rec, state_.analog_in.size() > 8 ? state_.analog_in[8] : 0.0);
      put_f64_le(rec, state_.analog_in.size() > 9 ? state_.analog_in[9] : 0.0);
      auto& flash = flash_mut();
      if (flash.size() >= kSensorLogBase + kSensorLogSize) {
        auto off = kSensorLogBase + (state_.sensor_log_cursor * rec.size()) % kSensorLogSize;
        std::copy(rec.begin(), rec.end(), flash.begin() + static_cast<std::ptrdiff_t>(off));
      }
      ++state_.sensor_log_cursor;
      break;
    }
    case NativeAction::Heartbeat:
      if (!state_.digital_out.empty()) state_.digital_out.back() ^= 1;
      break;
  }
}

void Device::schedule() {
  SimTask* best = nullptr;
  for (auto& t : state_.tasks) {
    if (t.state == TaskState::Running) t.state = TaskState::Ready;
    if (t.state != TaskState::Ready) continue;
    if (best == nullptr || t.priority < best->priority ||
        (t.priority == best->priority && t.task_id < best->task_id))
      best = &t;
  }
  if (best == nullptr) return;
  best->state = TaskState::Running;
  best->advance_pc();
  if (best->behavior.io_driven && !inbox_.empty()) {
    auto d = std::move(inbox_.front());
    inbox_.pop_front();
    if (io_handler_) {
      if (auto reply = io_handler_(d.payload)) outbox_.push_back({std::move(*reply), d.peer});
    }
  }
}

std::uint64_t Device::spawn_task(const std::string& name, int priority, Address entry_point,
                                 BehaviorProfile behavior,
                                 std::optional<std::string> owner_module) {
  if (name.empty()) throw Error(ErrorCode::BadArgument, "task name must not be empty");
  if (find_task(name) != nullptr)
    throw Error(ErrorCode::DuplicateName, "task '" + name + "' already exists");
  if (priority < 0 || priority > 255)
    throw Error(ErrorCode::BadArgument, "priority outside 0..255");
  behavior.validate();
  if (owner_module && find_module(*owner_module) == nullptr)
    throw Error(ErrorCode::BadArgument, "unknown owner module '" + *owner_module + "'");
  for (auto a : behavior.pc_walk)
    if (!is_readable(state_, a))
      throw Error(ErrorCode::UnmappedAddress, "pc_walk address " + format_address(a));

  SimTask t;
  t.task_id = next_task_id_++;
  t.name = name;
  t.priority = priority;
  t.entry_point = entry_point;
  t.pc = entry_point;
  t.link_register = entry_point;
  t.stack_base = 0x0f000000 - 0x10000 * (t.task_id % 0x100);
  t.sp = t.stack_base;
  t.owner_module = std::move(owner_module);
  t.rng_state = mix_seed(seed_ ^ behavior.seed ^ fnv1a(name));
  t.behavior = std::move(behavior);
  t.state = TaskState::Ready;
  state_.tasks.push_back(std::move(t));
  return state_.tasks.back().task_id;
}

SimTask& Device::mutable_task(std::uint64_t task_id) {
  for (auto& t : state_.tasks)
    if (t.task_id == task_id) return t;
  throw Error(ErrorCode::NoSuchTask, "no task with id " + std::to_string(task_id));
}

const SimTask& Device::task(std::uint64_t task_id) const {
  return const_cast<Device*>(this)->mutable_task(task_id);
}

const SimTask* Device::find_task(std::string_view name) const {
  for (const auto& t : state_.tasks)
    if (t.name == name) return &t;
  return nullptr;
}

void Device::control_task(std::uint64_t task_id, const TaskAction& action) {
  auto& t = mutable_task(task_id);
  switch (action.kind) {
    case TaskActionKind::Delete:
      std::erase_if(state_.tasks, [&](const SimTask& x) { return x.task_id == task_id; });
      return;
    case TaskActionKind::Suspend:
      t.state = TaskState::Suspend;
      t.delay_remaining = 0;
      return;
    case TaskActionKind::Resume:
      if (t.state == TaskState::Suspend) t.state = TaskState::Ready;
      return;
    case TaskActionKind::SetPriority:
      if (action.priority < 0 || action.priority > 255)
        throw Error(ErrorCode::BadArgument, "priority outside 0..255");
      t.priority = action.priority;
      return;
    case TaskActionKind::OverwriteCode:
      if (action.code.empty()) throw Error(ErrorCode::BadArgument, "empty code walk");
      for (auto a : action.code)
        if (!is_readable(state_, a))
          throw Error(ErrorCode::UnmappedAddress, "code address " + format_address(a));
      t.behavior.pc_walk = action.code;
      t.pc_index = 0;
      t.pc = action.code.front();
      return;
  }
}

const LoadedModule* Device::find_module(std::string_view name) const {
  for (const auto& m : state_.modules)
    if (m.name == name) return &m;
  return nullptr;
}

void Device::load_module(LoadedModule module) {
  if (find_module(module.name) != nullptr)
    throw Error(ErrorCode::DuplicateName, "module '" + module.name + "' already loaded");
  if (module.segment->empty()) throw Error(ErrorCode::BadArgument, "empty module segment");
  if (!module.contains(module.jump_table_addr) || !module.contains(module.control_fn_addr))
    throw Error(ErrorCode::BadArgument, "jump table or control function outside segment");
  for (const auto& m : state_.modules)
    if (overlaps(module.load_address, module.end(), m.load_address, m.end()))
      throw Error(ErrorCode::BadArgument, "module overlaps '" + m.name + "'");
  for (const auto& [addr, r] : state_.memory)
    if (overlaps(module.load_address, module.end(), addr, addr + r.bytes->size()))
      throw Error(ErrorCode::BadArgument, "module overlaps region '" + r.label + "'");
  state_.modules.push_back(std::move(module));
}

void Device::replace_module_segment(const std::string& name, Bytes segment) {
  for (auto& m : state_.modules) {
    if (m.name != name) continue;
    if (segment.size() != m.segment->size())
      throw Error(ErrorCode::BadArgument, "replacement segment must keep the module size");
    m.segment = std::make_shared<const Bytes>(std::move(segment));
    return;
  }
  throw Error(ErrorCode::BadArgument, "no module named '" + name + "'");
}

Address Device::map_region(const std::string& label, Bytes bytes, Address arena) {
  Address next = arena;
  for (const auto& [addr, r] : state_.memory)
    if (addr >= arena && addr < arena + kArenaSpan)
      next = std::max<Address>(next, (addr + r.bytes->size() + 0xfff) & ~Address{0xfff});
  state_.memory[next] = MemoryRegion{label, std::make_shared<const Bytes>(std::move(bytes))};
  return next;
}

Bytes Device::read_memory(Address addr, std::size_t len) const {
  return sim::read_memory(state_, addr, len);
}

void Device::write_memory(Address addr, ByteView data) {
  auto patch = [&](Address base, std::shared_ptr<const Bytes>& bytes) {
    if (addr < base || addr + data.size() > base + bytes->size()) return false;
    auto copy = std::make_shared<Bytes>(*bytes);
    std::copy(data.begin(), data.end(), copy->begin() + static_cast<std::ptrdiff_t>(addr - base));
    bytes = std::move(copy);
    return true;
  };
  for (auto& m : state_.modules)
    if (patch(m.load_address, m.segment)) return;
  for (auto& [base, r] : state_.memory)
    if (patch(base, r.bytes)) return;
  throw Error(ErrorCode::UnmappedAddress, "write to unmapped " + format_address(addr));
}

int Device::next_callback_id() { return max_callback_id(state_.timer_root) + 1; }

int Device::add_timer_callback(int timer_id, TimerCallback cb) {
  auto* node = find_timer(state_.timer_root, timer_id);
  if (node == nullptr) throw Error(ErrorCode::NoSuchTimer, "no timer " + std::to_string(timer_id));
  if (!is_readable(state_, cb.address, cb.segment_len))
    throw Error(ErrorCode::UnmappedAddress, "callback address " + format_address(cb.address));
  if (cb.callback_id == 0) cb.callback_id = next_callback_id();
  node->callbacks.push_back(cb);
  return cb.callback_id;
}

void Device::set_timer_divisor(int timer_id, std::uint32_t divisor) {
  if (divisor == 0) throw Error(ErrorCode::BadArgument, "divisor must be >= 1");
  auto* node = find_timer(state_.timer_root, timer_id);
  if (node == nullptr) throw Error(ErrorCode::NoSuchTimer, "no timer " + std::to_string(timer_id));
  if (node == &state_.timer_root) throw Error(ErrorCode::BadArgument, "root timer has no divisor");
  node->divisor_from_parent = divisor;
  recompute_periods(state_.timer_root);
}

void Device::redirect_callback(int callback_id, Address new_address, std::uint32_t segment_len) {
  auto* cb = find_callback(state_.timer_root, callback_id);
  if (cb == nullptr)
    throw Error(ErrorCode::BadArgument, "no callback " + std::to_string(callback_id));
  if (!is_readable(state_, new_address, segment_len))
    throw Error(ErrorCode::UnmappedAddress, "callback address " + format_address(new_address));
  cb->address = new_address;
  cb->segment_len = segment_len;
}

int Device::register_script(int timer_id, const std::string& source, ScriptAction action) {
  if (find_timer(state_.timer_root, timer_id) == nullptr)
    throw Error(ErrorCode::NoSuchTimer, "no timer " + std::to_string(timer_id));
  Bytes code(source.begin(), source.end());
  if (code.empty()) code.push_back(0);
  auto len = static_cast<std::uint32_t>(code.size());
  Address addr = map_region("script", std::move(code), kScriptArena);
  TimerCallback cb;
  cb.name = "script";
  cb.address = addr;
  cb.segment_len = len;
  cb.kind = CallbackKind::Script;
  int id = add_timer_callback(timer_id, cb);
  scripts_[id] = std::move(action);
  return id;
}

double Device::io_read(IoKind kind, std::size_t channel) const {
  auto check = [&](std::size_t n) {
    if (channel >= n)
      throw Error(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(channel) +
                                                    " outside 0.." + std::to_string(n - 1));
  };
  switch (kind) {
    case IoKind::AnalogIn: check(state_.analog_in.size()); return state_.analog_in[channel];
    case IoKind::AnalogOut: check(state_.analog_out.size()); return state_.analog_out[channel];
    case IoKind::DigitalIn: check(state_.digital_in.size()); return state_.digital_in[channel];
    case IoKind::DigitalOut: check(state_.digital_out.size()); return state_.digital_out[channel];
  }
  return 0.0;
}

void Device::io_write(IoKind kind, std::size_t channel, double value) {
  io_read(kind, channel);  // range check
  switch (kind) {
    case IoKind::AnalogIn: state_.analog_in[channel] = value; break;
    case IoKind::AnalogOut: state_.analog_out[channel] = value; break;
    case IoKind::DigitalIn: state_.digital_in[channel] = value != 0.0; break;
    case IoKind::DigitalOut: state_.digital_out[channel] = value != 0.0; break;
  }
}

void Device::syslog_write(Severity sev, std::string text) {
  state_.syslog.push_back({state_.uptime_ticks, sev, std::move(text)});
  while (state_.syslog.size() > kSyslogCapacity) state_.syslog.pop_front();
}

std::vector<SyslogEntry> Device::syslog_tail(std::size_t n) const {
  n = std::min(n, state_.syslog.size());
  return {state_.syslog.end() - static_cast<std::ptrdiff_t>(n), state_.syslog.end()};
}

Bytes Device::flash_read(std::size_t offset, std::size_t len) const {
  if (offset > state_.flash->size() || len > state_.flash->size() - offset)
    throw Error(ErrorCode::FlashOutOfRange, "flash range outside device flash");
  auto b = state_.flash->begin() + static_cast<std::ptrdiff_t>(offset);
  return {b, b + static_cast<std::ptrdiff_t>(len)};
}

void Device::flash_write(std::size_t offset, ByteView data) {
  if (offset > state_.flash->size() || data.size() > state_.flash->size() - offset)
    throw Error(ErrorCode::FlashOutOfRange, "flash range outside device flash");
  auto& flash = flash_mut();
  std::copy(data.begin(), data.end(), flash.begin() + static_cast<std::ptrdiff_t>(offset));
}

void Device::set_config(const std::string& key, const std::string& value) {
  if (key.empty()) throw Error(ErrorCode::BadArgument, "empty config key");
  state_.config[key] = value;
}

void Device::erase_config(const std::string& key) { state_.config.erase(key); }

void Device::reset() {
  std::vector<std::string> io_driven;
  for (const auto& t : state_.tasks)
    if (t.behavior.io_driven) io_driven.push_back(t.name);
  ++reset_count_;
  scripts_.clear();
  inbox_.clear();
  outbox_.clear();
  init_from_fixture();
  for (const auto& name : io_driven)
    if (const auto* t = find_task(name)) make_io_driven(t->task_id);
}

std::vector<Datagram> Device::take_outbox() {
  std::vector<Datagram> out;
  out.swap(outbox_);
  return out;
}

void Device::make_io_driven(std::uint64_t task_id) {
  auto& t = mutable_task(task_id);
  t.behavior.io_driven = true;
  t.delay_remaining = 0;
  if (t.state != TaskState::Suspend) t.state = TaskState::Pend;
}

}  // namespace diver::sim
