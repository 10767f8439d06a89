#include <string>

#include "diver/sim/device.hpp"
#include "diver/util/error.hpp"

namespace diver::sim {

namespace {

Bytes payload(std::uint64_t tag, std::size_t n) {
  Bytes out;
  std::uint64_t x = tag;
  while (out.size() < n) {
    x = mix_seed(x);
    for (int i = 0; i < 8 && out.size() < n; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  return out;
}

const SimTask& controller(const Device& d) {
  const auto* t = d.find_task(kControllerTask);
  if (t == nullptr) throw Error(ErrorCode::NoSuchTask, "controller task is not running");
  return *t;
}

void insert_flooder(Device& d, const std::string& module, ModuleKind kind, const std::string& path,
                    Address base, const std::string& task, int priority) {
  LoadedModule m;
  m.name = module;
  m.kind = kind;
  m.file_path = path;
  m.load_address = base;
  m.segment = std::make_shared<const Bytes>(payload(base, 4096));
  m.jump_table_addr = base + 0x10;
  m.control_fn_addr = base + 0x100;
  d.load_module(m);
  std::vector<Address> pcs;
  for (Address a = 0; a < 4; ++a) pcs.push_back(base + 0x100 + 0x10 * a);
  d.spawn_task(task, priority, base + 0x100, BehaviorProfile::from_ready_bias(0.9, pcs, base),
               module);
}

}  // namespace

void inject_attack(Device& d, int scenario) {
  switch (scenario) {
    case 1:  // kernel module + task flooding UDP
      insert_flooder(d, "udpFlood", ModuleKind::KernelModule, "/tmp/udpFlood.out", 0x01300000,
                     "tUdpFlood", 90);
      return;
    case 2:  // user-space RTP doing the same
      insert_flooder(d, "floodRtp", ModuleKind::Rtp, "/usr/floodRtp.vxe", 0x01400000,
                     "tFloodRtp", 95);
      return;
    case 3: {  // same-name module with tampered code
      const auto* m = d.find_module("netStack");
      if (m == nullptr) throw Error(ErrorCode::DeviceFault, "netStack module not loaded");
      Bytes seg = *m->segment;
      for (std::size_t i = 0x40; i < 0x80; ++i) seg[i] ^= 0xa5;
      d.replace_module_segment("netStack", std::move(seg));
      return;
    }
    case 4:  // background logger timer 50 ms -> 200 ms
      d.set_timer_divisor(3, 20);
      return;
    case 5: {  // exfiltration callback on the 100 ms timer
      Address a = d.map_region("exfil", payload(0xe5f1, 256), kAttackArena);
      TimerCallback cb;
      cb.name = "exfilUdp";
      cb.address = a;
      cb.segment_len = 64;
      cb.action = NativeAction::Exfiltrate;
      d.add_timer_callback(1, cb);
      return;
    }
    case 6: {  // logSensors callback pointed at attacker code
      Address a = d.map_region("hook", payload(0x6007, 256), kAttackArena);
      d.redirect_callback(4, a, 96);
      return;
    }
    case 7:
      d.control_task(controller(d).task_id, TaskAction::remove());
      return;
    case 8:
      d.control_task(controller(d).task_id, TaskAction::suspend());
      return;
    case 9: {  // blocking loop written past the hashed prefix of ctrlApp
      const auto& t = controller(d);
      const auto* m = d.find_module("ctrlApp");
      Address loop = m != nullptr ? m->load_address + 0x1800 : t.entry_point;
      const std::uint8_t branch_self[] = {0x48, 0x00, 0x00, 0x00};
      d.write_memory(loop, branch_self);
      d.control_task(t.task_id, TaskAction::overwrite_code({loop}));
      return;
    }
    case 10:
      d.control_task(controller(d).task_id, TaskAction::set_priority(200));
      return;
    default:
      throw Error(ErrorCode::InvalidScenario, "scenario must be in 1..10, got " + std::to_string(scenario));
  }
}

}  // namespace diver::sim
