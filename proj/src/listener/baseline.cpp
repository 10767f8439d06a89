#include <chrono>
#include <cmath>
#include <mutex>

#include "diver/listener/baseline.hpp"

namespace diver::listener {

using measurer::RecordSet;

std::map<std::string, ModuleInfo> modules_from_records(const RecordSet& rs) {
  std::map<std::string, ModuleInfo> out;
  for (std::size_t i = 0; i < rs.rows.size(); ++i)
    out[rs.at(i, "name")] =
        ModuleInfo{rs.at(i, "kind"), rs.at(i, "file_path"), rs.at(i, "load_address"), rs.at(i, "segment_hash")};
  return out;
}

std::vector<TimerRow> timer_rows_from_records(const RecordSet& rs) {
  std::vector<TimerRow> out;
  for (std::size_t i = 0; i < rs.rows.size(); ++i) {
    TimerRow r;
    r.depth = std::stoi(rs.at(i, "depth"));
    r.timer_id = std::stoi(rs.at(i, "timer_id"));
    r.period_ticks = static_cast<std::uint32_t>(std::stoul(rs.at(i, "period_ticks")));
    r.divisor = static_cast<std::uint32_t>(std::stoul(rs.at(i, "divisor")));
    r.callback_id = rs.at(i, "callback_id");
    r.kind = rs.at(i, "kind");
    r.name = rs.at(i, "name");
    r.address = rs.at(i, "address");
    r.segment_len = rs.at(i, "segment_len");
    r.code_hash = rs.at(i, "code_hash");
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, std::string> config_from_sysinfo(const RecordSet& rs) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < rs.rows.size(); ++i) {
    const auto& section = rs.at(i, "section");
    const auto& key = rs.at(i, "key");
    if (section == "kernel" && (key == "uptime_ticks" || key == "rtc_ms" || key == "task_count")) continue;
    out[section == "config" ? key : section + "." + key] = rs.at(i, "value");
  }
  return out;
}

Baseline build_baseline(Link& link, const BuildOptions& options) {
  if (!(options.sample_rate_hz > 0.0) || !(options.duration_s > 0.0))
    throw Error(ErrorCode::BadArgument, "sample rate and duration must be positive");
  Baseline b;
  b.created_at = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
  b.sample_rate_hz = options.sample_rate_hz;
  b.tolerances = options.tolerances;

  b.config = config_from_sysinfo(link.request("sysinfo"));
  auto ip = b.config.find("net.ip");
  b.device_id = ip != b.config.end() ? ip->second : "device";
  b.modules = modules_from_records(link.request("modules"));
  b.timer_tree = timer_rows_from_records(link.request("timer_tree"));

  std::mutex mu;
  std::vector<Sample> samples;
  auto sub = link.subscribe(
      "task_details id=all granularity=full rate=" + measurer::format_real(options.sample_rate_hz),
      [&](const RecordSet& rs) {
        if (options.on_record) options.on_record(rs);
        std::lock_guard lk(mu);
        samples.push_back(Sample::from_records(rs));
      });
  try {
    link.elapse(std::chrono::milliseconds(std::llround(options.duration_s * 1000.0)));
    link.unsubscribe(sub);
  } catch (...) {
    try {
      if (link.connected()) link.unsubscribe(sub);
    } catch (const Error&) {
    }
    throw;
  }
  if (!link.connected()) throw Error(ErrorCode::ConnectionLost, "connection lost while sampling");

  std::lock_guard lk(mu);
  if (samples.size() < options.min_samples)
    throw Error(ErrorCode::InsufficientSamples, std::to_string(samples.size()) + " samples, need " +
                                                    std::to_string(options.min_samples));
  b.sample_count = samples.size();
  b.task_profiles = compute_profiles(samples);
  return b;
}

}  // namespace diver::listener
