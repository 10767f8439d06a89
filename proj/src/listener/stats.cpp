#include <set>

#include "diver/listener/baseline.hpp"

namespace diver::listener {

using measurer::RecordSet;

TaskState tracked(TaskState s) { return s == TaskState::Running ? TaskState::Ready : s; }

std::string task_key(const std::string& name, const std::string& entry_point) {
  return name.empty() ? "@" + entry_point : name;
}

Sample Sample::from_records(const RecordSet& rs) {
  Sample s;
  s.tick = rs.tick;
  bool has_pc = rs.has_column("pc");
  bool has_entry = rs.has_column("entry_point");
  for (std::size_t i = 0; i < rs.rows.size(); ++i) {
    TaskSample t;
    t.key = task_key(rs.at(i, "name"), has_entry ? rs.at(i, "entry_point") : std::string("?"));
    t.task_id = std::stoull(rs.at(i, "task_id"));
    t.state = sim::parse_task_state(rs.at(i, "state"));
    t.priority = std::stoi(rs.at(i, "priority"));
    if (has_pc) t.pc = parse_address(rs.at(i, "pc"));
    s.tasks.push_back(std::move(t));
  }
  return s;
}

const TaskSample* Sample::find(const std::string& key) const {
  for (const auto& t : tasks)
    if (t.key == key) return &t;
  return nullptr;
}

Profiles compute_profiles(std::span<const Sample> window) {
  struct Acc {
    std::map<TaskState, std::size_t> counts;
    std::set<Address> pcs;
    std::size_t n = 0;
    int priority = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& sample : window) {
    for (const auto& t : sample.tasks) {
      auto& a = acc[t.key];
      ++a.n;
      ++a.counts[tracked(t.state)];
      if (t.pc) a.pcs.insert(*t.pc);
      a.priority = t.priority;
    }
  }
  Profiles out;
  for (const auto& [key, a] : acc) {
    TaskProfile p;
    for (auto s : kTrackedStates) {
      auto it = a.counts.find(s);
      p.state_fractions[s] = it == a.counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(a.n);
    }
    p.distinct_pc = a.pcs.size();
    p.priority = a.priority;
    p.samples = a.n;
    out[key] = std::move(p);
  }
  return out;
}

}  // namespace diver::listener
