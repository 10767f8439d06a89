#include "diver/sim/fixture.hpp"

#include <fstream>
#include <sstream>

#include "diver/util/error.hpp"
#include "json.hpp"

namespace diver::sim {

using nlohmann::json;

namespace {

constexpr Address kCtrlApp = 0x01000000;
constexpr Address kNetStack = 0x01100000;
constexpr Address kDbSvc = 0x01200000;
constexpr std::size_t kSegmentSize = 8 * 1024;
constexpr std::size_t kKernelSize = 16 * 1024;

/// Deterministic pseudo-code bytes; independent of the device seed so that
/// hashes are stable across runs.
Bytes code_bytes(std::uint64_t tag, std::size_t n) {
  Bytes out;
  out.reserve(n);
  std::uint64_t x = tag;
  while (out.size() < n) {
    x = mix_seed(x);
    for (int i = 0; i < 8 && out.size() < n; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  return out;
}

std::vector<Address> walk(Address base, std::size_t n, Address stride) {
  std::vector<Address> pcs;
  for (std::size_t i = 0; i < n; ++i) pcs.push_back(base + i * stride);
  return pcs;
}

BehaviorProfile cyclic(TaskState wait_state, std::uint32_t dwell, std::vector<Address> pcs) {
  BehaviorProfile p;
  p.transitions[TaskState::Ready] = {{wait_state, 1.0}};
  p.dwell_ticks[wait_state] = dwell;
  p.pc_walk = std::move(pcs);
  p.ready_bias = 1.0 / (dwell + 1);
  return p;
}

LoadedModule make_module(std::string name, ModuleKind kind, std::string path, Address base,
                         std::uint64_t tag, Address jt_off, Address cf_off) {
  LoadedModule m;
  m.name = std::move(name);
  m.kind = kind;
  m.file_path = std::move(path);
  m.load_address = base;
  m.segment = std::make_shared<const Bytes>(code_bytes(tag, kSegmentSize));
  m.jump_table_addr = base + jt_off;
  m.control_fn_addr = base + cf_off;
  return m;
}

// --- JSON helpers -----------------------------------------------------------

json behavior_to_json(const BehaviorProfile& b) {
  json j;
  j["seed"] = b.seed;
  j["ready_bias"] = b.ready_bias;
  j["io_driven"] = b.io_driven;
  json tr = json::object();
  for (const auto& [from, row] : b.transitions) {
    json r = json::object();
    for (const auto& [to, w] : row) r[std::string(to_string(to))] = w;
    tr[std::string(to_string(from))] = r;
  }
  j["transitions"] = tr;
  json dw = json::object();
  for (const auto& [s, n] : b.dwell_ticks) dw[std::string(to_string(s))] = n;
  j["dwell_ticks"] = dw;
  json pcs = json::array();
  for (auto a : b.pc_walk) pcs.push_back(format_address(a));
  j["pc_walk"] = pcs;
  return j;
}

BehaviorProfile behavior_from_json(const json& j) {
  BehaviorProfile b;
  b.seed = j.value("seed", std::uint64_t{0});
  b.ready_bias = j.value("ready_bias", 0.0);
  b.io_driven = j.value("io_driven", false);
  if (j.contains("transitions"))
    for (const auto& [from, row] : j["transitions"].items())
      for (const auto& [to, w] : row.items())
        b.transitions[parse_task_state(from)][parse_task_state(to)] = w.get<double>();
  if (j.contains("dwell_ticks"))
    for (const auto& [s, n] : j["dwell_ticks"].items())
      b.dwell_ticks[parse_task_state(s)] = n.get<std::uint32_t>();
  for (const auto& a : j.at("pc_walk")) b.pc_walk.push_back(parse_address(a.get<std::string>()));
  return b;
}

json timer_to_json(const TimerNode& n) {
  json j;
  j["timer_id"] = n.timer_id;
  j["period_ticks"] = n.period_ticks;
  j["divisor"] = n.divisor_from_parent;
  json cbs = json::array();
  for (const auto& cb : n.callbacks)
    cbs.push_back({{"callback_id", cb.callback_id},
                   {"name", cb.name},
                   {"address", format_address(cb.address)},
                   {"segment_len", cb.segment_len},
                   {"kind", std::string(to_string(cb.kind))},
                   {"action", std::string(to_string(cb.action))}});
  j["callbacks"] = cbs;
  json kids = json::array();
  for (const auto& c : n.children) kids.push_back(timer_to_json(c));
  j["children"] = kids;
  return j;
}

TimerNode timer_from_json(const json& j) {
  TimerNode n;
  n.timer_id = j.at("timer_id").get<int>();
  n.period_ticks = j.value("period_ticks", 10u);
  n.divisor_from_parent = j.value("divisor", 1u);
  for (const auto& c : j.value("callbacks", json::array())) {
    TimerCallback cb;
    cb.callback_id = c.at("callback_id").get<int>();
    cb.name = c.value("name", "");
    cb.address = parse_address(c.at("address").get<std::string>());
    cb.segment_len = c.value("segment_len", 64u);
    cb.kind = parse_callback_kind(c.value("kind", "native"));
    cb.action = parse_native_action(c.value("action", "none"));
    n.callbacks.push_back(cb);
  }
  for (const auto& c : j.value("children", json::array())) n.children.push_back(timer_from_json(c));
  return n;
}

}  // namespace

Fixture nominal_fixture(std::uint64_t seed) {
  Fixture f;
  f.seed = seed;
  auto& b = f.base;
  b.rtc_ms = 1767225600000;  // 2026-01-01T00:00:00Z
  b.config = {
      {"net.ip", "192.168.10.20"},       {"net.mask", "255.255.255.0"},
      {"net.gateway", "192.168.10.1"},   {"timer.sys_clk_rate", "1000"},
      {"timer.aux_clk_rate", "100"},     {"timeout.watchdog_ms", "500"},
      {"timeout.session_idle_s", "120"}, {"db.sync_period_s", "1"},
  };
  b.memory[kKernelBase] = MemoryRegion{"kernel", std::make_shared<const Bytes>(code_bytes(0x4b45524e, kKernelSize))};

  b.modules.push_back(make_module("ctrlApp", ModuleKind::CApplication, "/romfs/apps/ctrlApp.vxe",
                                  kCtrlApp, 0xc791, 0x10, 0x200));
  b.modules.push_back(make_module("netStack", ModuleKind::KernelModule,
                                  "/romfs/modules/netStack.out", kNetStack, 0x4e37, 0x10, 0x100));
  b.modules.push_back(make_module("dbSvc", ModuleKind::Rtp, "/romfs/rtp/dbSvc.vxe", kDbSvc,
                                  0xdb5c, 0x20, 0x180));

  // Timer tree: 10 ms root -> {100 ms -> 1 s, 50 ms}.
  TimerNode root{0, 10, 1, {{1, "sampleInputs", kCtrlApp + 0x400, 64, CallbackKind::Native, NativeAction::SampleInputs}}, {}};
  TimerNode t100{1, 0, 10, {{2, "netPoll", kKernelBase + 0x1000, 64, CallbackKind::Native, NativeAction::None}}, {}};
  TimerNode t1s{2, 0, 10, {{3, "wdgKick", kKernelBase + 0x2000, 64, CallbackKind::Native, NativeAction::Heartbeat}}, {}};
  TimerNode t50{3, 0, 5, {{4, "logSensors", kCtrlApp + 0x800, 96, CallbackKind::Native, NativeAction::LogSensors}}, {}};
  t100.children.push_back(t1s);
  root.children.push_back(t100);
  root.children.push_back(t50);
  recompute_periods(root);
  b.timer_root = root;

  auto ctrl = BehaviorProfile::from_ready_bias(0.97, walk(kCtrlApp + 0x200, 16, 0x20), 1);
  BehaviorProfile net_tx;
  net_tx.transitions[TaskState::Ready] = {{TaskState::Pend, 1.0}};
  net_tx.transitions[TaskState::Pend] = {{TaskState::Ready, 0.02}, {TaskState::Pend, 0.98}};
  net_tx.pc_walk = walk(kNetStack + 0x400, 6, 0x10);
  net_tx.ready_bias = 0.02;
  net_tx.seed = 4;

  f.tasks = {
      {"tCtrl", 50, kCtrlApp + 0x200, 0x0e000000, "ctrlApp", ctrl},
      {"tLogger", 100, kKernelBase + 0x800, 0x0e010000, std::nullopt,
       cyclic(TaskState::Delay, 49, walk(kKernelBase + 0x800, 4, 0x8))},
      {"tNetRx", 60, kNetStack + 0x200, 0x0e020000, "netStack",
       cyclic(TaskState::PendT, 19, walk(kNetStack + 0x200, 6, 0x10))},
      {"tNetTx", 70, kNetStack + 0x400, 0x0e030000, "netStack", net_tx},
      {"tDbSync", 120, kDbSvc + 0x180, 0x0e040000, "dbSvc",
       cyclic(TaskState::Delay, 997, walk(kDbSvc + 0x180, 8, 0x10))},
      {"tWdg", 30, kKernelBase + 0x2000, 0x0e050000, std::nullopt,
       cyclic(TaskState::Delay, 47, walk(kKernelBase + 0x2000, 2, 0x8))},
      {"tShell", 200, kKernelBase + 0x3000, 0x0e060000, std::nullopt,
       BehaviorProfile::from_ready_bias(0.0, walk(kKernelBase + 0x3000, 3, 0x8), 7)},
      {"tIdle", 255, kKernelBase + 0x3800, 0x0e070000, std::nullopt,
       BehaviorProfile::from_ready_bias(1.0, walk(kKernelBase + 0x3800, 2, 0x4), 8)},
  };
  return f;
}

std::string fixture_to_json(const Fixture& f) {
  const auto& b = f.base;
  json j;
  j["version"] = Fixture::kVersion;
  j["seed"] = f.seed;
  j["kernel_version"] = b.kernel_version;
  j["rtc_ms"] = b.rtc_ms;
  j["config"] = b.config;
  j["flash_size"] = b.flash->size();
  j["analog_channels"] = b.analog_in.size();
  j["digital_channels"] = b.digital_in.size();
  json mem = json::array();
  for (const auto& [addr, r] : b.memory)
    mem.push_back({{"label", r.label}, {"address", format_address(addr)}, {"bytes", base64_encode(*r.bytes)}});
  j["memory"] = mem;
  json mods = json::array();
  for (const auto& m : b.modules)
    mods.push_back({{"name", m.name},
                    {"kind", std::string(to_string(m.kind))},
                    {"file_path", m.file_path},
                    {"load_address", format_address(m.load_address)},
                    {"jump_table", format_address(m.jump_table_addr)},
                    {"control_fn", format_address(m.control_fn_addr)},
                    {"segment", base64_encode(*m.segment)}});
  j["modules"] = mods;
  json tasks = json::array();
  for (const auto& t : f.tasks) {
    json jt{{"name", t.name},
            {"priority", t.priority},
            {"entry_point", format_address(t.entry_point)},
            {"stack_base", format_address(t.stack_base)},
            {"behavior", behavior_to_json(t.behavior)}};
    if (t.owner_module) jt["owner_module"] = *t.owner_module;
    tasks.push_back(jt);
  }
  j["tasks"] = tasks;
  j["timer_tree"] = timer_to_json(b.timer_root);
  return j.dump(2);
}

Fixture fixture_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("fixture is not valid JSON: ") + e.what());
  }
  if (j.value("version", 0) != Fixture::kVersion)
    throw Error(ErrorCode::VersionMismatch, "unsupported fixture version");
  try {
    Fixture f;
    auto& b = f.base;
    f.seed = j.value("seed", std::uint64_t{42});
    b.kernel_version = j.value("kernel_version", b.kernel_version);
    b.rtc_ms = j.value("rtc_ms", std::int64_t{0});
    b.config = j.value("config", std::map<std::string, std::string>{});
    b.flash = std::make_shared<const Bytes>(j.value("flash_size", std::size_t{256 * 1024}), 0xff);
    auto na = j.value("analog_channels", std::size_t{16});
    auto nd = j.value("digital_channels", std::size_t{32});
    b.analog_in.assign(na, 0.0);
    b.analog_out.assign(na, 0.0);
    b.digital_in.assign(nd, 0);
    b.digital_out.assign(nd, 0);
    for (const auto& r : j.value("memory", json::array()))
      b.memory[parse_address(r.at("address").get<std::string>())] = MemoryRegion{
          r.value("label", ""), std::make_shared<const Bytes>(base64_decode(r.at("bytes").get<std::string>()))};
    for (const auto& m : j.value("modules", json::array())) {
      LoadedModule lm;
      lm.name = m.at("name").get<std::string>();
      lm.kind = parse_module_kind(m.at("kind").get<std::string>());
      lm.file_path = m.value("file_path", "");
      lm.load_address = parse_address(m.at("load_address").get<std::string>());
      lm.jump_table_addr = parse_address(m.at("jump_table").get<std::string>());
      lm.control_fn_addr = parse_address(m.at("control_fn").get<std::string>());
      lm.segment = std::make_shared<const Bytes>(base64_decode(m.at("segment").get<std::string>()));
      b.modules.push_back(std::move(lm));
    }
    for (const auto& t : j.value("tasks", json::array())) {
      TaskSpec s;
      s.name = t.at("name").get<std::string>();
      s.priority = t.at("priority").get<int>();
      s.entry_point = parse_address(t.at("entry_point").get<std::string>());
      s.stack_base = parse_address(t.value("stack_base", std::string("0")));
      if (t.contains("owner_module")) s.owner_module = t["owner_module"].get<std::string>();
      s.behavior = behavior_from_json(t.at("behavior"));
      f.tasks.push_back(std::move(s));
    }
    b.timer_root = timer_from_json(j.at("timer_tree"));
    recompute_periods(b.timer_root);
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed fixture: ") + e.what());
  }
}

void save_fixture(const Fixture& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + path.string());
  out << fixture_to_json(f) << "\n";
}

Fixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadArgument, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return fixture_from_json(ss.str());
}

}  // namespace diver::sim
