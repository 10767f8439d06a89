#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <set>

#include "diver/sim/device.hpp"
#include "diver/sim/fixture.hpp"
#include "diver/util/error.hpp"

using namespace diver;
using namespace diver::sim;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Unknown;
}

void visit(const TimerNode& n, const std::function<void(const TimerNode&, const TimerNode*)>& f,
           const TimerNode* parent = nullptr) {
  f(n, parent);
  for (const auto& c : n.children) visit(c, f, &n);
}

bool is_ready(TaskState s) { return s == TaskState::Ready || s == TaskState::Running; }

}  // namespace

TEST(Fixture, NominalShape) {
  Device d(nominal_fixture());
  const auto& s = d.state();
  EXPECT_EQ(s.tasks.size(), 8u);
  EXPECT_EQ(s.modules.size(), 3u);
  int nodes = 0;
  visit(s.timer_root, [&](const TimerNode&, const TimerNode*) { ++nodes; });
  EXPECT_EQ(nodes, 4);
  EXPECT_EQ(s.timer_root.period_ticks, 10u);
  EXPECT_EQ(s.analog_in.size(), 16u);
  EXPECT_EQ(s.digital_in.size(), 32u);
  EXPECT_TRUE(s.config.count("net.ip"));
  ASSERT_NE(d.find_task(kControllerTask), nullptr);
}

TEST(Fixture, JsonRoundTrip) {
  auto f = nominal_fixture(7);
  auto g = fixture_from_json(fixture_to_json(f));
  EXPECT_EQ(fixture_to_json(g), fixture_to_json(f));
  Device a(f), b(g);
  a.advance(500);
  b.advance(500);
  EXPECT_EQ(a.snapshot().canonical(), b.snapshot().canonical());
}

TEST(Fixture, FileErrors) {
  auto dir = std::filesystem::temp_directory_path() / "diver_fixture_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "f.json";
  save_fixture(nominal_fixture(), path);
  EXPECT_NO_THROW(load_fixture(path));
  auto text = fixture_to_json(nominal_fixture());
  auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_EQ(code_of([&] { fixture_from_json(text.replace(pos, 12, "\"version\": 0")); }), ErrorCode::VersionMismatch);
  EXPECT_EQ(code_of([&] { fixture_from_json("{\"version\": 1, \"tasks\": ["); }), ErrorCode::CorruptFile);
  std::filesystem::remove_all(dir);
}

TEST(Tick, DelayCountdownReachesReady) {
  Device d(nominal_fixture());
  BehaviorProfile b;
  b.transitions[TaskState::Ready] = {{TaskState::Delay, 1.0}};
  b.dwell_ticks[TaskState::Delay] = 3;
  b.pc_walk = {kKernelBase + 0x100};
  auto id = d.spawn_task("tSleeper", 250, kKernelBase + 0x100, b);
  d.tick();  // READY -> DELAY(3)
  ASSERT_EQ(d.task(id).state, TaskState::Delay);
  EXPECT_EQ(d.task(id).delay_remaining, 3u);
  d.tick();
  d.tick();
  EXPECT_EQ(d.task(id).delay_remaining, 1u);
  d.tick();
  EXPECT_TRUE(is_ready(d.task(id).state));
  EXPECT_EQ(d.task(id).delay_remaining, 0u);
}

TEST(Tick, RootTimerFiresOncePerPeriod) {
  Device d(nominal_fixture());
  std::vector<std::uint64_t> fired;
  d.register_script(0, "probe", [&](Device& dev) { fired.push_back(dev.state().uptime_ticks); });
  d.advance(9);
  EXPECT_TRUE(fired.empty());
  d.tick();
  ASSERT_EQ(fired.size(), 1u);
  EXPECT_EQ(fired[0], 10u);
  d.advance(100);
  EXPECT_EQ(fired.size(), 11u);
}

TEST(Tick, TimerArithmeticProperty) {
  Device d(nominal_fixture());
  std::map<int, std::vector<std::uint64_t>> fired;
  visit(d.state().timer_root, [&](const TimerNode& n, const TimerNode*) {
    int id = n.timer_id;
    d.register_script(id, "probe", [&fired, id](Device& dev) { fired[id].push_back(dev.state().uptime_ticks); });
  });
  d.advance(3000);
  visit(d.state().timer_root, [&](const TimerNode& n, const TimerNode* parent) {
    if (parent) {
      EXPECT_EQ(n.period_ticks, parent->period_ticks * n.divisor_from_parent);
    }
    const auto& f = fired[n.timer_id];
    EXPECT_EQ(f.size(), 3000u / n.period_ticks) << n.timer_id;
    for (auto t : f) EXPECT_EQ(t % n.period_ticks, 0u);
  });
}

TEST(Tick, ReadyBiasStatisticsAndDeterminism) {
  auto run = [] {
    Device d(nominal_fixture(), 42);
    auto id = d.spawn_task("tBias", 254, kKernelBase + 0x3900,
                           BehaviorProfile::from_ready_bias(0.8, {kKernelBase + 0x3900, kKernelBase + 0x3904}, 99));
    std::vector<TaskState> states;
    for (int i = 0; i < 1000; ++i) {
      d.tick();
      states.push_back(d.task(id).state);
    }
    return states;
  };
  auto a = run(), b = run();
  EXPECT_EQ(a, b);
  // Offline recount of the recorded states.
  std::size_t ready = 0;
  for (auto s : a) ready += is_ready(s) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(ready) / 1000.0, 0.8, 0.05);
}

TEST(Tick, SchedulerInvariantProperty) {
  Device d(nominal_fixture(), 42);
  for (int i = 0; i < 5000; ++i) {
    d.tick();
    const SimTask* running = nullptr;
    for (const auto& t : d.state().tasks) {
      if (t.state == TaskState::Running) {
        ASSERT_EQ(running, nullptr) << "two RUNNING tasks at tick " << i;
        running = &t;
      }
    }
    for (const auto& t : d.state().tasks) {
      if (t.state != TaskState::Ready) continue;
      ASSERT_NE(running, nullptr);
      EXPECT_TRUE(running->priority < t.priority ||
                  (running->priority == t.priority && running->task_id < t.task_id));
    }
    for (const auto& t : d.state().tasks)
      EXPECT_EQ(t.delay_remaining > 0, t.state == TaskState::Delay || t.state == TaskState::PendT);
  }
}

TEST(Tick, DeterministicSnapshotStream) {
  auto run = [] {
    Device d(nominal_fixture(), 42);
    std::vector<std::string> out;
    for (int i = 0; i < 40; ++i) {
      d.advance(97);
      if (i == 20) inject_attack(d, 5);
      out.push_back(sha256_hex(as_bytes(d.snapshot().canonical())));
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Tick, AddressHygiene) {
  Device d(nominal_fixture(), 42);
  for (int i = 0; i < 300; ++i) {
    d.advance(7);
    for (const auto& t : d.state().tasks) {
      EXPECT_TRUE(is_readable(d.state(), t.pc)) << t.name;
      if (t.owner_module) {
        const auto* m = d.find_module(*t.owner_module);
        ASSERT_NE(m, nullptr);
        EXPECT_TRUE(m->contains(t.pc)) << t.name;
      }
    }
  }
  visit(d.state().timer_root, [&](const TimerNode& n, const TimerNode*) {
    for (const auto& cb : n.callbacks) EXPECT_TRUE(is_readable(d.state(), cb.address, cb.segment_len));
  });
}

TEST(Tasks, SpawnDeleteAndDuplicates) {
  Device d(nominal_fixture());
  auto id = d.spawn_task("tExtra", 150, kKernelBase + 0x200,
                         BehaviorProfile::from_ready_bias(0.5, {kKernelBase + 0x200}));
  EXPECT_EQ(d.task(id).state, TaskState::Ready);
  EXPECT_EQ(d.task(id).pc, kKernelBase + 0x200);
  EXPECT_EQ(d.state().tasks.size(), 9u);
  EXPECT_EQ(code_of([&] {
              d.spawn_task("tCtrl", 50, kKernelBase, BehaviorProfile::from_ready_bias(0.5, {kKernelBase}));
            }),
            ErrorCode::DuplicateName);
  EXPECT_EQ(code_of([&] { d.spawn_task("", 50, kKernelBase, BehaviorProfile::from_ready_bias(0.5, {kKernelBase})); }),
            ErrorCode::BadArgument);
  d.control_task(id, TaskAction::remove());
  EXPECT_EQ(d.snapshot().find_task("tExtra"), nullptr);
  EXPECT_EQ(code_of([&] { d.control_task(id, TaskAction::suspend()); }), ErrorCode::NoSuchTask);
}

TEST(Tasks, SuspendHoldsForWholeWindow) {
  Device d(nominal_fixture());
  auto id = d.find_task("tCtrl")->task_id;
  d.control_task(id, TaskAction::suspend());
  for (int i = 0; i < 2000; ++i) {
    d.tick();
    ASSERT_EQ(d.task(id).state, TaskState::Suspend);
  }
  d.control_task(id, TaskAction::resume());
  d.advance(100);
  EXPECT_NE(d.task(id).state, TaskState::Suspend);
}

TEST(Tasks, PriorityAndOverwrite) {
  Device d(nominal_fixture());
  auto id = d.find_task("tCtrl")->task_id;
  d.control_task(id, TaskAction::set_priority(200));
  EXPECT_EQ(d.task(id).priority, 200);
  auto loop_addr = d.find_module("ctrlApp")->load_address + 0x1800;
  d.control_task(id, TaskAction::overwrite_code({loop_addr}));
  std::set<Address> pcs;
  for (int i = 0; i < 1000; ++i) {
    d.tick();
    pcs.insert(d.task(id).pc);
  }
  EXPECT_EQ(pcs, std::set<Address>{loop_addr});
}

TEST(Scenarios, ModuleReplacementKeepsNamesChangesOneHash) {
  Device d(nominal_fixture());
  std::map<std::string, std::string> before, after;
  for (const auto& m : d.state().modules) before[m.name] = module_segment_hash(m);
  inject_attack(d, 3);
  for (const auto& m : d.state().modules) after[m.name] = module_segment_hash(m);
  ASSERT_EQ(before.size(), after.size());
  int changed = 0;
  for (const auto& [name, h] : before) {
    ASSERT_TRUE(after.count(name));
    changed += after[name] != h;
  }
  EXPECT_EQ(changed, 1);
}

TEST(Scenarios, AddedCallbackOnHundredMsNode) {
  Device d(nominal_fixture());
  auto count = [&](int timer) { return find_timer(d.state().timer_root, timer)->callbacks.size(); };
  auto before = count(1);
  inject_attack(d, 5);
  EXPECT_EQ(find_timer(d.state().timer_root, 1)->period_ticks, 100u);
  EXPECT_EQ(count(1), before + 1);
}

TEST(Scenarios, PeriodChangeTouchesOnlyOneNode) {
  Device d(nominal_fixture());
  std::map<int, std::uint32_t> before, after;
  visit(d.state().timer_root, [&](const TimerNode& n, const TimerNode*) { before[n.timer_id] = n.period_ticks; });
  inject_attack(d, 4);
  visit(d.state().timer_root, [&](const TimerNode& n, const TimerNode*) { after[n.timer_id] = n.period_ticks; });
  int diffs = 0;
  for (const auto& [id, p] : before) diffs += after[id] != p;
  EXPECT_EQ(diffs, 1);
}

TEST(Scenarios, ControllerDeletionAndUnknownScenario) {
  Device d(nominal_fixture());
  inject_attack(d, 7);
  EXPECT_EQ(d.find_task("tCtrl"), nullptr);
  EXPECT_EQ(d.state().tasks.size(), 7u);
  Device e(nominal_fixture());
  EXPECT_EQ(code_of([&] { inject_attack(e, 0); }), ErrorCode::InvalidScenario);
  EXPECT_EQ(code_of([&] { inject_attack(e, 11); }), ErrorCode::InvalidScenario);
}

TEST(Scenarios, UnexpectedModuleAndTask) {
  for (int s : {1, 2}) {
    Device d(nominal_fixture());
    inject_attack(d, s);
    EXPECT_EQ(d.state().modules.size(), 4u);
    EXPECT_EQ(d.state().tasks.size(), 9u);
    EXPECT_EQ(d.state().modules.back().kind, s == 1 ? ModuleKind::KernelModule : ModuleKind::Rtp);
  }
}

TEST(Snapshot, StableAndMatchesMemory) {
  Device d(nominal_fixture());
  d.advance(123);
  auto a = d.snapshot(), b = d.snapshot();
  EXPECT_EQ(a.canonical(), b.canonical());
  const auto& m = d.state().modules.front();
  EXPECT_EQ(a.read_memory(m.load_address, 16), Bytes(m.segment->begin(), m.segment->begin() + 16));
  d.tick();
  EXPECT_EQ(a.tick(), 123u);  // earlier snapshot is unaffected
  EXPECT_EQ(code_of([&] { a.read_memory(0x7fff0000, 4); }), ErrorCode::UnmappedAddress);
}

TEST(Device, IoFlashSyslogAndReset) {
  Device d(nominal_fixture());
  d.io_write(IoKind::AnalogOut, 3, 2.5);
  EXPECT_EQ(d.io_read(IoKind::AnalogOut, 3), 2.5);
  EXPECT_EQ(code_of([&] { d.io_write(IoKind::AnalogOut, 99, 1.0); }), ErrorCode::ChannelOutOfRange);
  Bytes data{1, 2, 3, 4, 5, 6, 7, 8};
  d.flash_write(0, data);
  EXPECT_EQ(d.flash_read(0, 8), data);
  EXPECT_EQ(code_of([&] { d.flash_read(256 * 1024 - 2, 4); }), ErrorCode::FlashOutOfRange);
  d.syslog_write(Severity::Info, "hello");
  EXPECT_EQ(d.syslog_tail(1).at(0).text, "hello");

  auto old_ids = std::set<std::uint64_t>{};
  for (const auto& t : d.state().tasks) old_ids.insert(t.task_id);
  d.advance(500);
  d.reset();
  EXPECT_EQ(d.state().uptime_ticks, 0u);
  EXPECT_EQ(d.reset_count(), 1u);
  for (const auto& t : d.state().tasks) EXPECT_FALSE(old_ids.count(t.task_id));
  EXPECT_EQ(d.io_read(IoKind::AnalogOut, 3), 0.0);
}

TEST(Device, SyslogRingCapacity) {
  Device d(nominal_fixture());
  for (int i = 0; i < 2000; ++i) d.syslog_write(Severity::Info, std::to_string(i));
  EXPECT_EQ(d.state().syslog.size(), kSyslogCapacity);
  EXPECT_EQ(d.syslog_tail(1).at(0).text, "1999");
}
