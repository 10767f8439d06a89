#include <cmath>
#include <fstream>
#include <sstream>

#include "diver/listener/baseline.hpp"
#include "diver/util/bytes.hpp"
#include "json.hpp"

namespace diver::listener {

using nlohmann::json;

namespace {

bool is_hash(const std::string& h) {
  if (h.size() != 64) return false;
  for (char c : h)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

json body(const Baseline& b) {
  json j;
  j["version"] = Baseline::kVersion;
  j["device_id"] = b.device_id;
  j["created_at"] = b.created_at;
  j["sample_rate_hz"] = b.sample_rate_hz;
  j["sample_count"] = b.sample_count;
  j["config"] = b.config;
  json mods = json::object();
  for (const auto& [name, m] : b.modules)
    mods[name] = {{"kind", m.kind}, {"file_path", m.file_path}, {"load_address", m.load_address},
                  {"segment_hash", m.segment_hash}};
  j["modules"] = mods;
  json tree = json::array();
  for (const auto& r : b.timer_tree)
    tree.push_back({{"depth", r.depth}, {"timer_id", r.timer_id}, {"period_ticks", r.period_ticks},
                    {"divisor", r.divisor}, {"callback_id", r.callback_id}, {"kind", r.kind},
                    {"name", r.name}, {"address", r.address}, {"segment_len", r.segment_len},
                    {"code_hash", r.code_hash}});
  j["timer_tree"] = tree;
  json profiles = json::object();
  for (const auto& [key, p] : b.task_profiles) {
    json fr = json::object();
    for (const auto& [s, f] : p.state_fractions) fr[std::string(to_string(s))] = f;
    profiles[key] = {{"state_fractions", fr}, {"distinct_pc", p.distinct_pc}, {"priority", p.priority},
                     {"samples", p.samples}};
  }
  j["task_profiles"] = profiles;
  j["tolerances"] = {{"state_fraction_eps", b.tolerances.state_fraction_eps},
                     {"distinct_pc_ratio", b.tolerances.distinct_pc_ratio},
                     {"min_window", b.tolerances.min_window}};
  return j;
}

std::string checksum(const json& without) { return sha256_hex(as_bytes(without.dump())); }

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::CorruptFile, "baseline: " + why); }

}  // namespace

std::string baseline_to_json(const Baseline& b) {
  auto j = body(b);
  j["checksum"] = checksum(j);
  return j.dump(2) + "\n";
}

Baseline baseline_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  if (!j.is_object() || !j.contains("version")) corrupt("not a baseline document");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != Baseline::kVersion)
    throw Error(ErrorCode::VersionMismatch, "baseline version " + j["version"].dump() + ", expected " +
                                                std::to_string(Baseline::kVersion));
  if (!j.contains("checksum") || !j["checksum"].is_string()) corrupt("missing checksum");
  auto stored = j["checksum"].get<std::string>();
  j.erase("checksum");
  if (checksum(j) != stored) corrupt("checksum mismatch");

  Baseline b;
  try {
    b.device_id = j.at("device_id").get<std::string>();
    b.created_at = j.at("created_at").get<std::int64_t>();
    b.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    b.sample_count = j.at("sample_count").get<std::size_t>();
    b.config = j.at("config").get<std::map<std::string, std::string>>();
    for (const auto& [name, m] : j.at("modules").items())
      b.modules[name] = ModuleInfo{m.at("kind"), m.at("file_path"), m.at("load_address"), m.at("segment_hash")};
    for (const auto& r : j.at("timer_tree")) {
      TimerRow row;
      row.depth = r.at("depth");
      row.timer_id = r.at("timer_id");
      row.period_ticks = r.at("period_ticks");
      row.divisor = r.at("divisor");
      row.callback_id = r.at("callback_id");
      row.kind = r.at("kind");
      row.name = r.at("name");
      row.address = r.at("address");
      row.segment_len = r.at("segment_len");
      row.code_hash = r.at("code_hash");
      b.timer_tree.push_back(std::move(row));
    }
    for (const auto& [key, p] : j.at("task_profiles").items()) {
      TaskProfile prof;
      for (const auto& [s, f] : p.at("state_fractions").items())
        prof.state_fractions[sim::parse_task_state(s)] = f.get<double>();
      prof.distinct_pc = p.at("distinct_pc");
      prof.priority = p.at("priority");
      prof.samples = p.at("samples");
      b.task_profiles[key] = std::move(prof);
    }
    const auto& t = j.at("tolerances");
    b.tolerances.state_fraction_eps = t.at("state_fraction_eps");
    b.tolerances.distinct_pc_ratio = t.at("distinct_pc_ratio");
    b.tolerances.min_window = t.at("min_window");
  } catch (const json::exception& e) {
    corrupt(e.what());
  } catch (const Error& e) {
    corrupt(e.what());
  }

  for (const auto& [name, m] : b.modules)
    if (!is_hash(m.segment_hash)) corrupt("bad hash for module " + name);
  for (const auto& r : b.timer_tree)
    if (r.has_callback() && !is_hash(r.code_hash)) corrupt("bad hash for callback " + r.callback_id);
  for (const auto& [key, p] : b.task_profiles) {
    double sum = 0;
    for (const auto& [s, f] : p.state_fractions) sum += f;
    if (std::abs(sum - 1.0) > 1e-6) corrupt("state fractions of " + key + " do not sum to 1");
  }
  return b;
}

void save_baseline(const Baseline& b, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + path.string());
  out << baseline_to_json(b);
  if (!out) throw Error(ErrorCode::BadArgument, "write failed: " + path.string());
}

Baseline load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadArgument, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return baseline_from_json(ss.str());
}

}  // namespace diver::listener
