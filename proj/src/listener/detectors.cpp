#include "diver/listener/detectors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace diver::listener {

using measurer::RecordSet;

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Config: return "CONFIG";
    case Category::Module: return "MODULE";
    case Category::Timer: return "TIMER";
    case Category::Runtime: return "RUNTIME";
  }
  return "?";
}

Category parse_category(std::string_view s) {
  for (auto c : {Category::Config, Category::Module, Category::Timer, Category::Runtime})
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::BadArgument, "unknown alert category '" + std::string(s) + "'");
}

std::string_view to_string(AlertSeverity s) {
  switch (s) {
    case AlertSeverity::Info: return "info";
    case AlertSeverity::Warning: return "warning";
    case AlertSeverity::Critical: return "critical";
  }
  return "?";
}

AlertSeverity parse_alert_severity(std::string_view s) {
  for (auto v : {AlertSeverity::Info, AlertSeverity::Warning, AlertSeverity::Critical})
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::BadArgument, "unknown alert severity '" + std::string(s) + "'");
}

std::string Alert::key() const {
  return std::string(to_string(category)) + "|" + kind + "|" + subject;
}

namespace {

std::string ref(const Baseline& b) { return b.device_id + "@" + std::to_string(b.created_at); }

struct Emitter {
  const Baseline& b;
  Category category;
  std::uint64_t tick;
  std::vector<Alert> out;

  void operator()(AlertSeverity sev, std::string kind, std::string subject, std::string detail) {
    out.push_back(Alert{category, sev, std::move(kind), std::move(subject), std::move(detail), tick, ref(b)});
  }
};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::vector<Alert> detect_config(const Baseline& b, const RecordSet& sysinfo) {
  Emitter emit{b, Category::Config, sysinfo.tick, {}};
  auto cur = config_from_sysinfo(sysinfo);
  for (const auto& [key, old] : b.config) {
    auto it = cur.find(key);
    if (it == cur.end())
      emit(AlertSeverity::Warning, "REMOVED", key, "missing (baseline " + old + ")");
    else if (it->second != old)
      emit(AlertSeverity::Warning, "CHANGED", key, old + " -> " + it->second);
  }
  for (const auto& [key, value] : cur)
    if (!b.config.contains(key)) emit(AlertSeverity::Warning, "ADDED", key, "new key = " + value);
  return emit.out;
}

std::vector<Alert> detect_modules(const Baseline& b, const RecordSet& modules) {
  Emitter emit{b, Category::Module, modules.tick, {}};
  auto cur = modules_from_records(modules);
  for (const auto& [name, m] : cur) {
    auto it = b.modules.find(name);
    if (it == b.modules.end()) {
      emit(AlertSeverity::Critical, "UNEXPECTED", name, m.kind + " " + m.file_path + " at " + m.load_address);
      continue;
    }
    const auto& base = it->second;
    if (m.segment_hash != base.segment_hash)
      emit(AlertSeverity::Critical, "HASH_MISMATCH", name, base.segment_hash + " -> " + m.segment_hash);
    if (m.load_address != base.load_address)
      emit(AlertSeverity::Warning, "RELOCATED", name, base.load_address + " -> " + m.load_address);
    if (m.kind != base.kind || m.file_path != base.file_path)
      emit(AlertSeverity::Warning, "MODIFIED", name,
           base.kind + " " + base.file_path + " -> " + m.kind + " " + m.file_path);
  }
  for (const auto& [name, m] : b.modules)
    if (!cur.contains(name)) emit(AlertSeverity::Warning, "MISSING", name, m.kind + " " + m.file_path);
  return emit.out;
}

std::vector<Alert> detect_timer(const Baseline& b, const RecordSet& timer_tree) {
  Emitter emit{b, Category::Timer, timer_tree.tick, {}};
  auto cur = timer_rows_from_records(timer_tree);

  // Node properties come from the first row of each node; callbacks by id.
  auto index = [](const std::vector<TimerRow>& rows, std::map<int, const TimerRow*>& nodes,
                  std::map<std::string, const TimerRow*>& cbs) {
    for (const auto& r : rows) {
      nodes.emplace(r.timer_id, &r);
      if (r.has_callback()) cbs.emplace(r.callback_id, &r);
    }
  };
  std::map<int, const TimerRow*> base_nodes, cur_nodes;
  std::map<std::string, const TimerRow*> base_cbs, cur_cbs;
  index(b.timer_tree, base_nodes, base_cbs);
  index(cur, cur_nodes, cur_cbs);

  for (const auto& [id, n] : cur_nodes) {
    auto subject = "timer " + std::to_string(id);
    auto it = base_nodes.find(id);
    if (it == base_nodes.end()) {
      emit(AlertSeverity::Warning, "STRUCTURE_CHANGED", subject, "new timer node, period " +
                                                                     std::to_string(n->period_ticks) + " ticks");
      continue;
    }
    const auto* o = it->second;
    if (n->period_ticks != o->period_ticks || n->divisor != o->divisor)
      emit(AlertSeverity::Warning, "PERIOD_CHANGED", subject,
           "period " + std::to_string(o->period_ticks) + " -> " + std::to_string(n->period_ticks) +
               " ticks (divisor " + std::to_string(o->divisor) + " -> " + std::to_string(n->divisor) + ")");
    if (n->depth != o->depth)
      emit(AlertSeverity::Warning, "STRUCTURE_CHANGED", subject,
           "depth " + std::to_string(o->depth) + " -> " + std::to_string(n->depth));
  }
  for (const auto& [id, n] : base_nodes)
    if (!cur_nodes.contains(id))
      emit(AlertSeverity::Warning, "STRUCTURE_CHANGED", "timer " + std::to_string(id), "timer node missing");

  for (const auto& [id, c] : cur_cbs) {
    auto subject = "callback " + id + " (" + c->name + ")";
    auto it = base_cbs.find(id);
    if (it == base_cbs.end()) {
      emit(AlertSeverity::Critical, "ADDED_CALLBACK", subject,
           "on timer " + std::to_string(c->timer_id) + " at " + c->address + ", hash " + c->code_hash);
      continue;
    }
    const auto* o = it->second;
    std::vector<std::string> changes;
    auto diff = [&](const char* field, const std::string& was, const std::string& now) {
      if (was != now) changes.push_back(std::string(field) + " " + was + " -> " + now);
    };
    diff("timer", std::to_string(o->timer_id), std::to_string(c->timer_id));
    diff("name", o->name, c->name);
    diff("kind", o->kind, c->kind);
    diff("address", o->address, c->address);
    diff("segment_len", o->segment_len, c->segment_len);
    diff("code_hash", o->code_hash, c->code_hash);
    if (!changes.empty()) {
      std::string detail;
      for (const auto& ch : changes) detail += (detail.empty() ? "" : "; ") + ch;
      emit(AlertSeverity::Critical, "CALLBACK_MODIFIED", subject, detail);
    }
  }
  for (const auto& [id, o] : base_cbs)
    if (!cur_cbs.contains(id))
      emit(AlertSeverity::Warning, "MISSING_CALLBACK", "callback " + id + " (" + o->name + ")",
           "was on timer " + std::to_string(o->timer_id));
  return emit.out;
}

std::vector<Alert> detect_task_inventory(const Baseline& b, const Sample& latest) {
  Emitter emit{b, Category::Runtime, latest.tick, {}};
  for (const auto& [key, p] : b.task_profiles) {
    const auto* t = latest.find(key);
    if (t == nullptr) {
      emit(AlertSeverity::Critical, "MISSING_TASK", key, "not in task list");
    } else if (t->priority != p.priority) {
      emit(AlertSeverity::Warning, "PRIORITY_CHANGED", key,
           "priority " + std::to_string(p.priority) + " -> " + std::to_string(t->priority));
    }
  }
  for (const auto& t : latest.tasks)
    if (!b.task_profiles.contains(t.key))
      emit(AlertSeverity::Critical, "UNEXPECTED_TASK", t.key,
           "task id " + std::to_string(t.task_id) + ", priority " + std::to_string(t.priority));
  return emit.out;
}

std::vector<Alert> detect_runtime(const Baseline& b, std::span<const Sample> window) {
  if (window.size() < b.tolerances.min_window || window.empty())
    throw Error(ErrorCode::InsufficientSamples, std::to_string(window.size()) + " samples, need " +
                                                    std::to_string(b.tolerances.min_window));
  auto out = detect_task_inventory(b, window.back());
  Emitter emit{b, Category::Runtime, window.back().tick, {}};
  auto cur = compute_profiles(window);
  for (const auto& [key, base] : b.task_profiles) {
    auto it = cur.find(key);
    if (it == cur.end()) continue;
    const auto& p = it->second;

    // One STATE_SHIFT per task, naming the state that moved most.
    TaskState worst = TaskState::Ready;
    double worst_delta = 0;
    for (auto s : kTrackedStates) {
      auto f0 = base.state_fractions.contains(s) ? base.state_fractions.at(s) : 0.0;
      auto f1 = p.state_fractions.contains(s) ? p.state_fractions.at(s) : 0.0;
      if (std::abs(f1 - f0) > worst_delta) {
        worst_delta = std::abs(f1 - f0);
        worst = s;
      }
    }
    if (worst_delta > b.tolerances.state_fraction_eps) {
      auto f0 = base.state_fractions.contains(worst) ? base.state_fractions.at(worst) : 0.0;
      auto f1 = p.state_fractions.at(worst);
      emit(AlertSeverity::Warning, "STATE_SHIFT", key,
           std::string(to_string(worst)) + " fraction " + fixed3(f1) + " vs baseline " + fixed3(f0));
    }
    if (static_cast<double>(p.distinct_pc) < b.tolerances.distinct_pc_ratio * static_cast<double>(base.distinct_pc))
      emit(AlertSeverity::Warning, "PC_STAGNATION", key,
           std::to_string(p.distinct_pc) + " distinct PCs vs baseline " + std::to_string(base.distinct_pc));
  }
  out.insert(out.end(), emit.out.begin(), emit.out.end());
  return out;
}

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::Low: return "low";
    case Bucket::Med: return "med";
    case Bucket::High: return "high";
  }
  return "?";
}

ActivityLevel activity_level(double ready_fraction, std::size_t distinct_pc, const ActivityThresholds& t) {
  ActivityLevel a;
  a.ready_bucket = ready_fraction > t.ready_high ? Bucket::High
                   : ready_fraction >= t.ready_med ? Bucket::Med
                                                   : Bucket::Low;
  a.pc_bucket = distinct_pc >= t.pc_high ? Bucket::High : distinct_pc >= t.pc_med ? Bucket::Med : Bucket::Low;
  return a;
}

ListenerConfig load_listener_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadArgument, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ListenerConfig c;
  try {
    auto j = nlohmann::json::parse(ss.str());
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      c.tolerances.state_fraction_eps = t.value("state_fraction_eps", c.tolerances.state_fraction_eps);
      c.tolerances.distinct_pc_ratio = t.value("distinct_pc_ratio", c.tolerances.distinct_pc_ratio);
      c.tolerances.min_window = t.value("min_window", c.tolerances.min_window);
    }
    if (j.contains("activity")) {
      const auto& a = j["activity"];
      c.activity.ready_med = a.value("ready_med", c.activity.ready_med);
      c.activity.ready_high = a.value("ready_high", c.activity.ready_high);
      c.activity.pc_med = a.value("pc_med", c.activity.pc_med);
      c.activity.pc_high = a.value("pc_high", c.activity.pc_high);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return c;
}

}  // namespace diver::listener
