#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diver/sim/device.hpp"

namespace diver::sim {

struct TaskSpec {
  std::string name;
  int priority = 100;
  Address entry_point = 0;
  Address stack_base = 0;
  std::optional<std::string> owner_module;
  BehaviorProfile behavior;
};

/// Boot image of a simulated device: everything reset() restores.
struct Fixture {
  static constexpr int kVersion = 1;

  std::uint64_t seed = 42;
  DeviceState base;  // tasks are spawned from `tasks`, not from base.tasks
  std::vector<TaskSpec> tasks;
};

/// Eight tasks, three modules, a four-node timer tree, 16 analog and 32
/// digital channels.
Fixture nominal_fixture(std::uint64_t seed = 42);

std::string fixture_to_json(const Fixture& f);
Fixture fixture_from_json(const std::string& text);
void save_fixture(const Fixture& f, const std::filesystem::path& path);
Fixture load_fixture(const std::filesystem::path& path);

}  // namespace diver::sim
